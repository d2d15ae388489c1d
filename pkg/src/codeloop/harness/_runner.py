"""Guarded executor for rendered driver scripts.

Reads the rendered script from stdin, compiles and runs it in a fresh
namespace. A completed script has already printed its own protocol line;
any failure (syntax errors in spliced code, definition-time or runtime
exceptions) is converted into a single "ERR <class>: <message>" line on
the real stdout so the host can distinguish task errors from harness
breakage, which surfaces as a nonzero exit instead.
"""
import sys

_REAL_STDOUT = sys.stdout


def _emit_err(exc):
    message = " ".join(str(exc).splitlines())
    _REAL_STDOUT.write("ERR %s: %s\n" % (type(exc).__name__, message))
    _REAL_STDOUT.flush()


def main():
    source = sys.stdin.read()
    try:
        code = compile(source, "<driver>", "exec")
        exec(code, {"__name__": "__main__"})
    except BaseException as exc:  # noqa: BLE001 - every task failure maps to ERR
        _emit_err(exc)


if __name__ == "__main__":
    main()
