"""Command-line surface and the game-file format."""

from .gamefile import GameFileError, parse_game_file, serialize_game, shipped_game

__all__ = ["GameFileError", "parse_game_file", "serialize_game", "shipped_game"]
