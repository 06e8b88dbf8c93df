//! Byte classes shared by the targets, shaped like their C counterparts.

use crate::symcore::{SymByte, SymError, TraceCtx};
use crate::if_site;

const FILE: &str = "ctype.rs";

/// `c <= '9' && c >= '0'`
pub(crate) fn is_digit(ctx: &mut TraceCtx, b: &SymByte) -> Result<bool, SymError> {
    Ok(ctx.if_(&if_site!(FILE, "isdigit"), b.at_most(b'9'))?
        && ctx.if_(&if_site!(FILE, "isdigit"), b.at_least(b'0'))?)
}

pub(crate) fn is_alpha(ctx: &mut TraceCtx, b: &SymByte) -> Result<bool, SymError> {
    if ctx.if_(&if_site!(FILE, "isalpha"), b.at_least(b'a'))? {
        return ctx.if_(&if_site!(FILE, "isalpha"), b.at_most(b'z'));
    }
    Ok(ctx.if_(&if_site!(FILE, "isalpha"), b.at_least(b'A'))?
        && ctx.if_(&if_site!(FILE, "isalpha"), b.at_most(b'Z'))?)
}
