"""Parser, CFG, and def-use analysis for the MiniSol contract subset."""

from .nodes import (
    ANCHOR_TOKENS,
    AnchorKind,
    AssignOp,
    AssignStmt,
    Ast,
    BinaryExpr,
    CallExpr,
    CastExpr,
    Diagnostic,
    Expr,
    ExprStmt,
    FunctionDef,
    IfStmt,
    Literal,
    Param,
    ParseError,
    PathExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    Stmt,
    TupleCaptureStmt,
    UnaryExpr,
    VarDecl,
    VarDeclStmt,
)
from .parser import ParseResult, parse, parse_strict, pretty_print, render_expr, render_stmt
from .graphs import (
    Cfg,
    DefUse,
    build_cfg,
    build_defuse,
    find_call,
    flat_statements,
    paths_in_expr,
    primary_function,
    stmt_call,
    stmt_capture,
    stmt_reads_writes,
)

__all__ = [
    "ANCHOR_TOKENS", "AnchorKind", "AssignOp", "AssignStmt", "Ast",
    "BinaryExpr", "CallExpr", "CastExpr", "Cfg", "DefUse", "Diagnostic",
    "Expr", "ExprStmt", "FunctionDef", "IfStmt", "Literal", "Param",
    "ParseError", "ParseResult", "PathExpr", "RequireStmt", "ReturnStmt",
    "SourceUnit", "Stmt", "TupleCaptureStmt", "UnaryExpr", "VarDecl",
    "VarDeclStmt", "build_cfg", "build_defuse", "find_call",
    "flat_statements", "parse", "parse_strict", "paths_in_expr",
    "pretty_print", "primary_function", "render_expr", "render_stmt",
    "stmt_call", "stmt_capture", "stmt_reads_writes",
]
