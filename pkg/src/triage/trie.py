"""Token prefix-tree over roster identifiers, used to constrain decoding."""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterator

from .errors import TokenizationFailure
from .roster import Roster

if TYPE_CHECKING:
    from .backends.base import TokenizerHandle


class TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self) -> None:
        self.children: dict[int, TrieNode] = {}
        self.terminal: str | None = None


class TokenTrie:
    """Prefix tree over token-id sequences; terminals name roster members.

    Every roster member maps to exactly one terminal path and vice versa.
    A terminal with children means one identifier is a strict token-prefix
    of another; the decoder handles that case explicitly.
    """

    def __init__(self, vocabulary: str):
        self.root = TrieNode()
        self.vocabulary = vocabulary
        self.size = 0

    def insert(self, token_ids: list[int], member: str) -> None:
        if not token_ids:
            raise TokenizationFailure(member)
        node = self.root
        for tok in token_ids:
            node = node.children.setdefault(tok, TrieNode())
        if node.terminal is not None and node.terminal != member:
            raise TokenizationFailure(
                member, f"token path collides with {node.terminal!r}"
            )
        if node.terminal is None:
            node.terminal = member
            self.size += 1

    def terminals(self) -> Iterator[tuple[tuple[int, ...], str]]:
        """Yield (token path, member) pairs in token order."""
        stack: list[tuple[TrieNode, tuple[int, ...]]] = [(self.root, ())]
        while stack:
            node, prefix = stack.pop()
            if node.terminal is not None:
                yield prefix, node.terminal
            for tok in sorted(node.children, reverse=True):
                stack.append((node.children[tok], prefix + (tok,)))

    def is_empty(self) -> bool:
        return self.size == 0


def compile_trie(roster: Roster, tokenizer: "TokenizerHandle") -> TokenTrie:
    """Tokenize every roster member into the trie; enforces the bijection."""
    trie = TokenTrie(vocabulary=tokenizer.name)
    for member in roster:
        try:
            ids = tokenizer.tokenize(member)
        except Exception as exc:  # tokenizer-specific failure
            raise TokenizationFailure(member, str(exc)) from exc
        trie.insert(ids, member)
    return trie
