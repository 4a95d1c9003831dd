# suffix_automaton.py
"""
Suffix automaton over a dense integer alphabet [0, sigma).

States live in flat lists (length, link, last end position, transitions as a
sigma-wide row per state) to keep the per-symbol cost low for texts of a few
hundred thousand symbols.
"""

from typing import List, Sequence

import numpy as np


class SuffixAutomaton:
    def __init__(self, text: Sequence[int], alphabet_size: int) -> None:
        self.sigma = int(alphabet_size)
        self.text_length = len(text)
        self.length: List[int] = [0]
        self.link: List[int] = [-1]
        self.lastpos: List[int] = [-1]
        self.next: List[int] = [-1] * self.sigma
        self._last = 0
        for position, token in enumerate(text):
            self._insert(position, int(token))
        self._propagate_lastpos()

    @property
    def size(self) -> int:
        return len(self.length)

    def _new_state(self, length: int, link: int, lastpos: int, row: List[int]) -> int:
        self.length.append(length)
        self.link.append(link)
        self.lastpos.append(lastpos)
        self.next.extend(row)
        return len(self.length) - 1

    def _insert(self, position: int, c: int) -> None:
        sigma, nxt, length, link = self.sigma, self.next, self.length, self.link
        cur = self._new_state(length[self._last] + 1, 0, position, [-1] * sigma)
        p = self._last
        while p != -1 and nxt[p * sigma + c] == -1:
            nxt[p * sigma + c] = cur
            p = link[p]
        if p != -1:
            q = nxt[p * sigma + c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                # clones carry no end position of their own
                clone = self._new_state(length[p] + 1, link[q], -1, nxt[q * sigma:(q + 1) * sigma])
                while p != -1 and nxt[p * sigma + c] == q:
                    nxt[p * sigma + c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        self._last = cur

    def _propagate_lastpos(self) -> None:
        """lastpos[s] = largest end position of any occurrence of the strings in s."""
        order = np.argsort(np.asarray(self.length), kind="stable")[::-1]
        lastpos, link = self.lastpos, self.link
        for s in order.tolist():
            parent = link[s]
            if parent >= 0 and lastpos[s] > lastpos[parent]:
                lastpos[parent] = lastpos[s]

    def is_substring(self, query: Sequence[int]) -> bool:
        p = 0
        for c in query:
            c = int(c)
            if c >= self.sigma:
                return False
            p = self.next[p * self.sigma + c]
            if p == -1:
                return False
        return True

    def matching_statistics(self, query: Sequence[int], min_end: int = 0) -> np.ndarray:
        """
        out[t] = length of the longest suffix of query[:t+1] that occurs in the
        text with an occurrence ending at a position >= min_end.
        """
        sigma, nxt, length, link, lastpos = self.sigma, self.next, self.length, self.link, self.lastpos
        out = np.zeros(len(query), dtype=np.int64)
        v, run = 0, 0
        for t, c in enumerate(query):
            c = int(c)
            while v and nxt[v * sigma + c] == -1:
                v = link[v]
                run = length[v]
            target = nxt[v * sigma + c]
            if target != -1:
                v = target
                run += 1
            else:
                v, run = 0, 0
            u, ru = v, run
            while u and lastpos[u] < min_end:
                u = link[u]
                ru = length[u]
            out[t] = ru
        return out
