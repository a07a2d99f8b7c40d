import math
import numpy as np

class AliasTable:
    """
    Samples from a finite discrete distribution in O(1) using Vose's alias method.
    Outcomes are the indices 0..n-1 of the weight array.
    """
    def __init__(self, weights):
        weights = np.asarray(weights, dtype=float)
        n = len(weights)
        if n == 0:
            raise ValueError("Alias table needs at least one weight.")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("Alias table weights must be finite and non-negative.")
        total = float(weights.sum())
        if total <= 0.0:
            raise ValueError("Bad weights: total probability is zero.")

        scaled = weights * n / total
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]

        prob = np.ones(n)
        alias = np.arange(n)
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)

        # Leftovers are 1 up to rounding
        for i in large + small:
            prob[i] = 1.0
            alias[i] = i

        self.n = n
        self.prob = prob
        self.alias = alias
        self._prob_list: list[float] = prob.tolist()
        self._alias_list: list[int] = alias.tolist()

    def draw(self, u1: float, u2: float) -> int:
        """Map two independent uniforms on [0,1) to an outcome index."""
        i = int(u1 * self.n)
        if i >= self.n:
            i = self.n - 1
        return i if u2 < self._prob_list[i] else self._alias_list[i]

    def draw_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        i = np.minimum((rng.random(size) * self.n).astype(np.int64), self.n - 1)
        accept = rng.random(size) < self.prob[i]
        return np.where(accept, i, self.alias[i])

class RandomStream:
    """
    Seeded stream of uniforms drawn in blocks from a numpy Generator.
    One stream per trajectory; identical seeds give identical streams.
    """
    BLOCK = 4096

    def __init__(self, seed: int | np.random.SeedSequence | np.random.Generator):
        if isinstance(seed, np.random.Generator):
            self.generator = seed
        else:
            self.generator = np.random.default_rng(seed)
        self._block: list[float] = []
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._block):
            self._block = self.generator.random(self.BLOCK).tolist()
            self._pos = 0
        u = self._block[self._pos]
        self._pos += 1
        return u

    def exponential(self, rate: float) -> float:
        return -math.log(1.0 - self.uniform()) / rate
