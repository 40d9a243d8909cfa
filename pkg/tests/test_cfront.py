import pytest

from eqalign import cfront
from eqalign.cfront import (ErrorKind, SubsetError, classify_identifiers,
                            list_functions, parse_function, unparse)

from conftest import LOOP_FOR_SRC, WRITE_RETRY_SRC


def collect_names(ast):
    names = {}

    def walk_expr(expr):
        if isinstance(expr, cfront.Name):
            names.setdefault(expr.name, set()).add(expr.kind)
        for child in cfront._expr_children(expr):
            walk_expr(child)

    def walk_stmt(stmt):
        for e in cfront._stmt_exprs(stmt):
            walk_expr(e)
        for s in cfront._stmt_children(stmt):
            walk_stmt(s)

    walk_stmt(ast.body)
    return names


def test_parse_loop_function_params():
    ast = parse_function(LOOP_FOR_SRC)
    assert ast.name == "f"
    assert [p.name for p in ast.params] == ["str", "len"]
    assert ast.params[0].type_text == "char *"


def test_parse_identity_function():
    ast = parse_function("int id(int x){return x;}")
    assert [p.name for p in ast.params] == ["x"]
    assert len(ast.body.items) == 1
    assert isinstance(ast.body.items[0], cfront.Return)


def test_goto_is_unsupported():
    with pytest.raises(SubsetError) as exc:
        parse_function("void f(){ goto L; L:; }")
    assert exc.value.kind == ErrorKind.UNSUPPORTED_FEATURE


@pytest.mark.parametrize("source", [
    "void f(int a, ...) { }",
    "void f() { asm(\"nop\"); }",
    "void f() { \n#define X 1\n }",
    "void f(int n) { int x = sizeof(n); }",
])
def test_excluded_features(source):
    with pytest.raises(SubsetError) as exc:
        parse_function(source)
    assert exc.value.kind == ErrorKind.UNSUPPORTED_FEATURE


def test_malformed_input_is_parse_error():
    with pytest.raises(SubsetError) as exc:
        parse_function("int f( { return; }")
    assert exc.value.kind == ErrorKind.PARSE_ERROR


def test_undeclared_callee_is_function():
    ast = classify_identifiers(parse_function(LOOP_FOR_SRC))
    names = collect_names(ast)
    assert names["writable"] == {"function"}
    assert names["write"] == {"function"}


def test_undeclared_value_is_global():
    ast = classify_identifiers(parse_function("int f() { int x; x = errno; return x; }"))
    names = collect_names(ast)
    assert names["errno"] == {"global"}
    assert names["x"] == {"local"}


def test_declared_local_stays_local():
    ast = classify_identifiers(parse_function(
        "int f() { int n = 1; n = n + n; return n; }"))
    assert collect_names(ast)["n"] == {"local"}


def test_call_and_value_use_is_global_function_pointer():
    ast = classify_identifiers(parse_function(
        "int f(int x) { handler = fallback; return handler(x); }"))
    names = collect_names(ast)
    assert names["handler"] == {"global"}
    assert names["fallback"] == {"global"}


def test_parameter_shadowing_resolves_to_inner_local():
    ast = classify_identifiers(parse_function("""
        int f(int x) {
          if (x > 0) { int x = 2; x = x + 1; }
          return x;
        }
        """))
    names = collect_names(ast)
    assert names["x"] == {"param", "local"}


def test_multiple_functions_require_name():
    source = "int a(){return 1;}\nint b(){return 2;}"
    with pytest.raises(SubsetError):
        parse_function(source)
    assert parse_function(source, "b").name == "b"
    assert [fn.name for fn in list_functions(source)] == ["a", "b"]


def test_top_level_noise_is_skipped():
    source = """
    #include <stdio.h>
    struct pair { int a; int b; };
    int counter = 0;
    extern void helper(int);
    int real(int v) { return v + 1; }
    """
    assert [fn.name for fn in list_functions(source)] == ["real"]


def test_unknown_type_names_accepted_as_opaque_text():
    ast = parse_function("int f(mytype_t *handle) { wchar_t *p = handle; return 0; }")
    assert ast.params[0].type_text == "mytype_t *"
    decl = ast.body.items[0]
    assert isinstance(decl, cfront.DeclStmt)
    assert decl.type_text == "wchar_t"
    assert decl.declarators[0].pointer == 1


def test_string_and_char_literals():
    ast = parse_function(r'int f() { return check("a\n", ' + r"'x'); }")
    ret = ast.body.items[0]
    call = ret.value
    assert call.args[0].value == b"a\n"
    assert call.args[1].value == ord("x")


def test_numeric_suffixes_normalize():
    ast = parse_function("long f() { return 0LL + 0x10u + 010; }")
    expr = ast.body.items[0].value
    assert expr.left.left.value == 0
    assert expr.left.right.value == 16
    assert expr.right.value == 8


@pytest.mark.parametrize("source", [
    LOOP_FOR_SRC,
    WRITE_RETRY_SRC,
    "int f(int a, int b) { return a > b ? a - b : b - a; }",
    "int f(int n) { int s = 0; do { s += n--; } while (n > 0 && s < 100); return s; }",
    """int f(int x) {
        switch (x) { case 1: x++; case 2: x += 2; break; default: x = 0; }
        return x;
    }""",
    "int f(struct n *p) { p->next->val = p->val; return (*p).val; }",
    "int f(int *a, int i) { a[i] = a[i + 1]; return a[0]; }",
])
def test_unparse_round_trip(source):
    # Unparsing braces every nested statement, so one round trip normalizes
    # the tree; after that, parse(unparse(.)) must be the identity.
    first = parse_function(unparse(parse_function(source)))
    second = parse_function(unparse(first))
    assert first.params == second.params
    assert first.body == second.body


def test_classification_is_deterministic():
    source = "int f(int a) { b = helper(a); return b + c; }"
    kinds = []
    for _ in range(2):
        ast = classify_identifiers(parse_function(source))
        kinds.append(sorted((n, tuple(sorted(k))) for n, k in collect_names(ast).items()))
    assert kinds[0] == kinds[1]


def test_function_pointer_parameter_name_comes_from_declarator_group():
    ast = parse_function(
        "int apply(int (*fn)(int, int), int v) { return fn(v, v); }")
    assert [p.name for p in ast.params] == ["fn", "v"]
    classify_identifiers(ast)
    names = collect_names(ast)
    assert names["fn"] == {"param"}
