use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Branch id of a switch head node.
pub const SWITCH_HEAD: i64 = -1;
/// Branch id of the default edge of a switch.
pub const SWITCH_DEFAULT: i64 = -2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BrType {
    If = 0,
    Switch = 1,
}

impl BrType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            BrType::If => "if",
            BrType::Switch => "switch",
        }
    }
}

/// Static location of a conditional in a program under test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchSite {
    pub file: Cow<'static, str>,
    pub func: Cow<'static, str>,
    pub line: u32,
    pub col: u32,
    pub br_type: BrType,
    pub br_id: i64,
}

impl BranchSite {
    pub const fn new_if(file: &'static str, func: &'static str, line: u32, col: u32) -> Self {
        BranchSite {
            file: Cow::Borrowed(file),
            func: Cow::Borrowed(func),
            line,
            col,
            br_type: BrType::If,
            br_id: 0,
        }
    }

    pub const fn new_switch(file: &'static str, func: &'static str, line: u32, col: u32) -> Self {
        BranchSite {
            file: Cow::Borrowed(file),
            func: Cow::Borrowed(func),
            line,
            col,
            br_type: BrType::Switch,
            br_id: SWITCH_HEAD,
        }
    }

    pub fn with_br(&self, br_id: i64) -> Self {
        BranchSite {
            br_id,
            ..self.clone()
        }
    }

    /// `file_func_line_col_type`, the identifier of the head node.
    pub fn head_loc(&self) -> String {
        format!(
            "{}_{}_{}_{}_{}",
            self.file,
            self.func,
            self.line,
            self.col,
            self.br_type.name()
        )
    }

    /// `file_func_line_col_type_brId`; switch heads omit the branch id.
    pub fn loc(&self) -> String {
        let head = self.head_loc();
        match self.br_id {
            SWITCH_HEAD => head,
            SWITCH_DEFAULT => format!("{head}_default"),
            id => format!("{head}_{id}"),
        }
    }

    pub fn is_head(&self) -> bool {
        self.br_id == SWITCH_HEAD
    }
}

impl fmt::Display for BranchSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.loc())
    }
}

/// Splits a loc string into its `file_func` group prefix, if it has the
/// `..._line_col_type[_br]` suffix.
pub fn loc_group(loc: &str) -> Option<&str> {
    let is_type = |t: &str| matches!(t, "if" | "switch");
    let (mut rest, last) = loc.rsplit_once('_')?;
    if !is_type(last) {
        let (head, ty) = rest.rsplit_once('_')?;
        if !is_type(ty) {
            return None;
        }
        rest = head;
    }
    let (head, col) = rest.rsplit_once('_')?;
    let (group, line) = head.rsplit_once('_')?;
    if col.parse::<u32>().is_err() || line.parse::<u32>().is_err() {
        return None;
    }
    Some(group)
}
