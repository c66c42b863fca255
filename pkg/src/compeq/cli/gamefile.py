"""Line-oriented, indentation-nested game description format.

::

    # comments and blank lines are ignored
    players=2
    player=1 infoset=commit
      action=c0 player=2 infoset=guess
        action=g0 terminal u=(-1,1)
        action=g1 terminal u=(1,-1)
      ...

The first node line is the root and carries no ``action=``. Every other node
line starts with ``action=<label>`` and is a child of the nearest less
indented line. Utilities are integers or ``p/q`` rationals.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..game.tree import GameTree, History, validate_game


class GameFileError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


_TOKEN = re.compile(r"(\w+)=(\([^)]*\)|\S+)|(terminal)\b")


def _parse_line(text: str, lineno: int) -> dict:
    fields: dict[str, str] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise GameFileError(lineno, f"cannot parse {text[pos:]!r}")
        if m.group(3):
            key, value = "terminal", ""
        else:
            key, value = m.group(1), m.group(2)
        if key in fields:
            raise GameFileError(lineno, f"duplicate field {key}")
        fields[key] = value
        pos = m.end()
    return fields


def _rational(text: str, lineno: int) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise GameFileError(lineno, f"bad rational {text!r}") from None


def parse_game_file(text: str, name: str = "game", *, validate: bool = True) -> GameTree:
    """Parse ``text``. With ``validate=False`` a structurally odd tree is returned as is."""
    declared_players: int | None = None
    histories: list[History] = []
    player_fn: dict[History, int] = {}
    utilities: dict[History, tuple[Fraction, ...]] = {}
    infosets: dict[History, str] = {}
    stack: list[tuple[int, History]] = []
    seen_root = False

    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip(" "))
        if "\t" in body[:indent + 1]:
            raise GameFileError(lineno, "tabs are not allowed in indentation")
        fields = _parse_line(body, lineno)
        if "players" in fields and len(fields) == 1:
            if seen_root:
                raise GameFileError(lineno, "players= must precede the tree")
            try:
                declared_players = int(fields["players"])
            except ValueError:
                raise GameFileError(lineno, "players must be an integer") from None
            continue
        while stack and stack[-1][0] >= indent:
            stack.pop()
        if not seen_root:
            if "action" in fields:
                raise GameFileError(lineno, "root node must not have an action")
            h: History = ()
            seen_root = True
        else:
            if not stack:
                raise GameFileError(lineno, "second root node")
            if "action" not in fields:
                raise GameFileError(lineno, "child node needs action=")
            h = stack[-1][1] + (fields["action"],)
            if h in player_fn or h in utilities:
                raise GameFileError(lineno, f"duplicate action {fields['action']!r}")
        if "terminal" in fields:
            if "player" in fields or "infoset" in fields:
                raise GameFileError(lineno, "terminal nodes take only u=")
            u = fields.get("u")
            if not u or not (u.startswith("(") and u.endswith(")")):
                raise GameFileError(lineno, "terminal needs u=(q1,...,qc)")
            utilities[h] = tuple(_rational(x, lineno) for x in u[1:-1].split(","))
        else:
            if "player" not in fields or "infoset" not in fields:
                raise GameFileError(lineno, "decision node needs player= and infoset=")
            try:
                player_fn[h] = int(fields["player"])
            except ValueError:
                raise GameFileError(lineno, "player must be an integer") from None
            infosets[h] = fields["infoset"]
        unknown = set(fields) - {"action", "player", "infoset", "terminal", "u"}
        if unknown:
            raise GameFileError(lineno, f"unknown fields {sorted(unknown)}")
        histories.append(h)
        stack.append((indent, h))

    if not seen_root:
        raise GameFileError(None, "empty game file")
    if declared_players is None:
        declared_players = max([len(u) for u in utilities.values()] + list(player_fn.values()) + [1])
    g = GameTree(declared_players, tuple(histories), player_fn, utilities, infosets, name)
    report = validate_game(g) if validate else None
    if report is not None and not report.ok:
        raise GameFileError(None, f"invalid game: {report}")
    return g


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def serialize_game(g: GameTree) -> str:
    lines = [f"players={g.num_players}"]
    for h in g.histories:
        parts = []
        if h:
            parts.append(f"action={h[-1]}")
        if g.is_terminal(h):
            parts.append("terminal u=(" + ",".join(_fmt(q) for q in g.utilities[h]) + ")")
        else:
            parts.append(f"player={g.player_fn[h]} infoset={g.infosets[h]}")
        lines.append("  " * len(h) + " ".join(parts))
    return "\n".join(lines) + "\n"


def shipped_game(name: str = "fig1") -> GameTree:
    """Parse one of the game files bundled with the package."""
    from importlib.resources import files

    text = files("compeq").joinpath("data", f"{name}.game").read_text(encoding="utf-8")
    return parse_game_file(text, name=name)
