"""Porter suffix-stripping stemmer.

Classic five-step algorithm over lowercase ASCII words.  Words shorter
than three letters and non-alphabetic input are returned unchanged.
Results are memoized since the same terms recur across a corpus.
"""

from functools import lru_cache

_VOWELS = "aeiou"


class _Stemmer:
    """Mutable working state for one word: buffer b, end index k, offset j."""

    def __init__(self, word: str):
        self.b = word
        self.k = len(word) - 1
        self.j = 0

    def _cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in _VOWELS:
            return False
        if ch == "y":
            return True if i == 0 else not self._cons(i - 1)
        return True

    def _m(self) -> int:
        # number of vowel-consonant sequences in b[0..j]
        n = 0
        i = 0
        while True:
            if i > self.j:
                return n
            if not self._cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self._cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self._cons(i):
                    break
                i += 1
            i += 1

    def _vowel_in_stem(self) -> bool:
        return any(not self._cons(i) for i in range(self.j + 1))

    def _double_cons(self, j: int) -> bool:
        return j >= 1 and self.b[j] == self.b[j - 1] and self._cons(j)

    def _cvc(self, i: int) -> bool:
        # consonant-vowel-consonant ending at i, last consonant not w/x/y
        if i < 2 or not self._cons(i) or self._cons(i - 1) or not self._cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def _ends(self, s: str) -> bool:
        length = len(s)
        if length > self.k + 1:
            return False
        if self.b[self.k - length + 1 : self.k + 1] != s:
            return False
        self.j = self.k - length
        return True

    def _set_to(self, s: str) -> None:
        self.b = self.b[: self.j + 1] + s
        self.k = self.j + len(s)

    def _replace(self, s: str) -> None:
        if self._m() > 0:
            self._set_to(s)

    def _step1ab(self) -> None:
        if self.b[self.k] == "s":
            if self._ends("sses"):
                self.k -= 2
            elif self._ends("ies"):
                self._set_to("i")
            elif self.b[self.k - 1] != "s":
                self.k -= 1
        if self._ends("eed"):
            if self._m() > 0:
                self.k -= 1
        elif (self._ends("ed") or self._ends("ing")) and self._vowel_in_stem():
            self.k = self.j
            if self._ends("at"):
                self._set_to("ate")
            elif self._ends("bl"):
                self._set_to("ble")
            elif self._ends("iz"):
                self._set_to("ize")
            elif self._double_cons(self.k):
                self.k -= 1
                if self.b[self.k] in "lsz":
                    self.k += 1
            elif self._m() == 1 and self._cvc(self.k):
                self._set_to("e")

    def _step1c(self) -> None:
        if self._ends("y") and self._vowel_in_stem():
            self.b = self.b[: self.k] + "i"

    def _step2(self) -> None:
        ch = self.b[self.k - 1]
        if ch == "a":
            if self._ends("ational"):
                self._replace("ate")
            elif self._ends("tional"):
                self._replace("tion")
        elif ch == "c":
            if self._ends("enci"):
                self._replace("ence")
            elif self._ends("anci"):
                self._replace("ance")
        elif ch == "e":
            if self._ends("izer"):
                self._replace("ize")
        elif ch == "l":
            if self._ends("abli"):
                self._replace("able")
            elif self._ends("alli"):
                self._replace("al")
            elif self._ends("entli"):
                self._replace("ent")
            elif self._ends("eli"):
                self._replace("e")
            elif self._ends("ousli"):
                self._replace("ous")
        elif ch == "o":
            if self._ends("ization"):
                self._replace("ize")
            elif self._ends("ation"):
                self._replace("ate")
            elif self._ends("ator"):
                self._replace("ate")
        elif ch == "s":
            if self._ends("alism"):
                self._replace("al")
            elif self._ends("iveness"):
                self._replace("ive")
            elif self._ends("fulness"):
                self._replace("ful")
            elif self._ends("ousness"):
                self._replace("ous")
        elif ch == "t":
            if self._ends("aliti"):
                self._replace("al")
            elif self._ends("iviti"):
                self._replace("ive")
            elif self._ends("biliti"):
                self._replace("ble")

    def _step3(self) -> None:
        ch = self.b[self.k]
        if ch == "e":
            if self._ends("icate"):
                self._replace("ic")
            elif self._ends("ative"):
                self._replace("")
            elif self._ends("alize"):
                self._replace("al")
        elif ch == "i":
            if self._ends("iciti"):
                self._replace("ic")
        elif ch == "l":
            if self._ends("ical"):
                self._replace("ic")
            elif self._ends("ful"):
                self._replace("")
        elif ch == "s":
            if self._ends("ness"):
                self._replace("")

    def _step4(self) -> None:
        ch = self.b[self.k - 1]
        if ch == "a":
            if not self._ends("al"):
                return
        elif ch == "c":
            if not (self._ends("ance") or self._ends("ence")):
                return
        elif ch == "e":
            if not self._ends("er"):
                return
        elif ch == "i":
            if not self._ends("ic"):
                return
        elif ch == "l":
            if not (self._ends("able") or self._ends("ible")):
                return
        elif ch == "n":
            if not (
                self._ends("ant")
                or self._ends("ement")
                or self._ends("ment")
                or self._ends("ent")
            ):
                return
        elif ch == "o":
            if not (
                (self._ends("ion") and self.b[self.j] in "st") or self._ends("ou")
            ):
                return
        elif ch == "s":
            if not self._ends("ism"):
                return
        elif ch == "t":
            if not (self._ends("ate") or self._ends("iti")):
                return
        elif ch == "u":
            if not self._ends("ous"):
                return
        elif ch == "v":
            if not self._ends("ive"):
                return
        elif ch == "z":
            if not self._ends("ize"):
                return
        else:
            return
        if self._m() > 1:
            self.k = self.j

    def _step5(self) -> None:
        self.j = self.k
        if self.b[self.k] == "e":
            a = self._m()
            if a > 1 or (a == 1 and not self._cvc(self.k - 1)):
                self.k -= 1
        if self.b[self.k] == "l" and self._double_cons(self.k) and self._m() > 1:
            self.k -= 1

    def run(self) -> str:
        if self.k <= 1:
            return self.b
        self._step1ab()
        self._step1c()
        self._step2()
        self._step3()
        self._step4()
        self._step5()
        return self.b[: self.k + 1]


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Stem one lowercase word; non-ASCII-alphabetic words pass through."""
    if not word.isascii() or not word.isalpha():
        return word
    return _Stemmer(word).run()
