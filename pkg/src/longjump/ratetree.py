import numpy as np

class RateTree:
    """
    Binary indexed (Fenwick) tree over non-negative rates r_0..r_{n-1}.
    Point updates and prefix searches are O(log n). The tree is rebuilt from
    the stored rates every REBUILD_EVERY updates so summation drift stays at
    rounding level.
    """
    REBUILD_EVERY = 1 << 16

    def __init__(self, rates):
        rates = np.asarray(rates, dtype=float)
        if rates.ndim != 1 or len(rates) == 0:
            raise ValueError("RateTree needs a non-empty 1-d rate array.")
        if np.any(rates < 0):
            raise ValueError("Rates must be non-negative.")
        self.n = len(rates)
        self.rates: list[float] = rates.tolist()
        self._top = 1 << (self.n.bit_length() - 1)
        self._updates = 0
        self.rebuild()

    def rebuild(self):
        tree = [0.0] * (self.n + 1)
        for i, r in enumerate(self.rates, start=1):
            tree[i] += r
            parent = i + (i & -i)
            if parent <= self.n:
                tree[parent] += tree[i]
        self._tree = tree
        self._updates = 0

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> float:
        return self.rates[i]

    def update(self, i: int, rate: float):
        """Set rate i to a new value."""
        delta = rate - self.rates[i]
        if delta == 0.0:
            return
        self.rates[i] = rate
        self._updates += 1
        if self._updates >= self.REBUILD_EVERY:
            self.rebuild()
            return
        tree = self._tree
        j = i + 1
        while j <= self.n:
            tree[j] += delta
            j += j & -j

    def prefix(self, k: int) -> float:
        """Sum of rates 0..k-1."""
        total = 0.0
        tree = self._tree
        while k > 0:
            total += tree[k]
            k -= k & -k
        return total

    def total(self) -> float:
        return self.prefix(self.n)

    def find(self, u: float) -> int:
        """
        Index i with prefix(i) <= u < prefix(i+1), for 0 <= u < total().
        Zero-rate entries are never returned.
        """
        tree = self._tree
        pos = 0
        step = self._top
        while step:
            nxt = pos + step
            if nxt <= self.n and tree[nxt] <= u:
                pos = nxt
                u -= tree[nxt]
            step >>= 1
        # Rounding can land past the last positive rate
        if pos >= self.n:
            pos = self.n - 1
        while self.rates[pos] == 0.0 and pos > 0:
            pos -= 1
        return pos
