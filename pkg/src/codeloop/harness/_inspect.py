"""Syntax-level inspection of a task-language program.

Reads program source from stdin and prints one protocol line:

    OK <repr of payload dict>   on a parseable program
    ERR SyntaxError: <message>  otherwise

The payload carries everything the host needs without parsing the task
language itself: imported dotted names, attribute access paths, a nested
[label, children] syntax-tree dump, the token stream, and a stripped
rendering of the source (comments gone, top-level assignments removed).
"""
import ast
import io
import keyword
import sys
import tokenize


def _collect_imports(tree):
    names = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                names.append(alias.name)
        elif isinstance(node, ast.ImportFrom):
            if node.module:
                names.append(node.module)
                for alias in node.names:
                    names.append(node.module + "." + alias.name)
    return sorted(set(names))


def _attribute_path(node):
    parts = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        return ".".join(reversed(parts))
    return None


def _collect_attributes(tree):
    paths = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Attribute):
            path = _attribute_path(node)
            if path:
                paths.add(path)
    return sorted(paths)


def _dump_tree(node):
    if not isinstance(node, ast.AST):
        return [repr(node), []]
    children = []
    for _field, value in ast.iter_fields(node):
        if isinstance(value, list):
            for item in value:
                children.append(_dump_tree(item))
        elif isinstance(value, ast.AST):
            children.append(_dump_tree(value))
        else:
            children.append([repr(value), []])
    return [type(node).__name__, children]


def _token_stream(source):
    tokens = []
    try:
        for tok in tokenize.generate_tokens(io.StringIO(source).readline):
            name = tokenize.tok_name[tok.type]
            if name == "NAME" and keyword.iskeyword(tok.string):
                name = "KEYWORD"
            tokens.append([name, tok.string])
    except (tokenize.TokenError, IndentationError):
        return None
    return tokens


def _strip_source(tree):
    kept = [
        node
        for node in tree.body
        if not isinstance(node, (ast.Assign, ast.AnnAssign, ast.AugAssign))
    ]
    return ast.unparse(ast.Module(body=kept, type_ignores=[]))


def main():
    source = sys.stdin.read()
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        message = " ".join(str(exc).splitlines())
        sys.stdout.write("ERR SyntaxError: " + message + "\n")
        sys.stdout.flush()
        return
    payload = {
        "imports": _collect_imports(tree),
        "attributes": _collect_attributes(tree),
        "tree": _dump_tree(tree),
        "tokens": _token_stream(source),
        "stripped": _strip_source(tree),
    }
    sys.stdout.write("OK " + repr(payload) + "\n")
    sys.stdout.flush()


if __name__ == "__main__":
    main()
