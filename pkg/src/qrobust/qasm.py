"""Reader and writer for a small line-oriented circuit language.

Example::

    # three-qubit register
    qubits 3;
    h 0;
    cp(pi/2) 1 0;
    rot(0.876, -1.43) 2;

Statements end with ``;``; ``#`` starts a comment. Angles are decimal
literals or ``pi`` combined with ``*`` and ``/`` (and a leading sign).
"""
import math
import re

from .circuit import GATES, Circuit, make_gate
from .matcore import ValidationError


class QasmError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[();,*/+-])
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append((kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value, what=None):
        kind, text, line, col = self.next()
        if text != value:
            found = "end of input" if kind == "eof" else repr(text)
            raise QasmError(f"expected {what or repr(value)}, found {found}", line, col)

    def integer(self, what):
        kind, text, line, col = self.next()
        if kind != "number" or not text.isdigit():
            found = "end of input" if kind == "eof" else repr(text)
            raise QasmError(f"expected {what}, found {found}", line, col)
        return int(text), line, col

    def factor(self):
        kind, text, line, col = self.next()
        if text in ("+", "-"):
            v = self.factor()
            return -v if text == "-" else v
        if kind == "number":
            return float(text)
        if kind == "name" and text == "pi":
            return math.pi
        found = "end of input" if kind == "eof" else repr(text)
        raise QasmError(f"expected an angle, found {found}", line, col)

    def angle(self):
        value = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            rhs = self.factor()
            if op == "*":
                value *= rhs
            else:
                if rhs == 0:
                    _, _, line, col = self.tokens[self.i - 1]
                    raise QasmError("division by zero in angle", line, col)
                value /= rhs
        return value

    def parse(self):
        kind, text, line, col = self.next()
        if text != "qubits":
            raise QasmError("circuit must start with 'qubits <n>;'", line, col)
        n, line, col = self.integer("qubit count")
        if n < 1:
            raise QasmError("qubit count must be positive", line, col)
        self.expect(";")
        gates = []
        while self.peek()[0] != "eof":
            kind, name, line, col = self.next()
            if kind != "name":
                raise QasmError(f"expected a gate name, found {name!r}", line, col)
            if name not in GATES:
                raise QasmError(f"unknown gate {name!r}", line, col)
            nparams, nqubits, _ = GATES[name]
            params = []
            if self.peek()[1] == "(":
                self.next()
                params.append(self.angle())
                while self.peek()[1] == ",":
                    self.next()
                    params.append(self.angle())
                self.expect(")", "')'")
            qubits = []
            while self.peek()[0] == "number":
                q, qline, qcol = self.integer("qubit index")
                if q >= n:
                    raise QasmError(f"qubit {q} out of range for {n} qubits", qline, qcol)
                qubits.append(q)
            if len(params) != nparams or len(qubits) != nqubits:
                raise QasmError(
                    f"gate {name!r} takes {nparams} angle(s) and {nqubits} qubit(s), "
                    f"got {len(params)} and {len(qubits)}", line, col)
            self.expect(";", "';'")
            try:
                gates.append(make_gate(name, params, qubits))
            except ValidationError as exc:
                raise QasmError(str(exc), line, col) from None
        return Circuit(n, gates)


def parse_circuit(text):
    """Parse circuit source into a :class:`~qrobust.circuit.Circuit`.

    Raises :class:`QasmError` (with ``line`` and ``col``) on malformed input.
    """
    return _Parser(text).parse()


def format_angle(x):
    # shortest repr that round-trips exactly
    return repr(float(x))


def format_circuit(circuit):
    """Print a circuit in the same language :func:`parse_circuit` reads."""
    lines = [f"qubits {circuit.n};"]
    for g in circuit.gates:
        if g.label not in GATES:
            raise ValidationError(f"gate {g.label!r} has no textual form")
        args = f"({', '.join(format_angle(p) for p in g.params)})" if g.params else ""
        lines.append(f"{g.label}{args} {' '.join(str(q) for q in g.support)};")
    return "\n".join(lines) + "\n"


def load_circuit(path):
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())
