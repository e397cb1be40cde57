"""
Exact solver for the per-pair lightpath-addition problem:

    minimize   sum(n_c)
    subject to theta <= sum(n_c * DR_c) < theta + delta
               0 < sum(n_c * eta_c) <= nli_budget        (skipped when nli_budget is None)

Ties among minimum-count solutions are broken by smallest total datarate, then smallest total slot count, then
smallest total NLI coefficient. The search branches over datarate multisets first (few of them fit the
[theta, theta + delta) window), then assigns concrete configurations per datarate.
"""
import math
from collections import defaultdict
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from periplan.planning.physics import ChannelConfig


class ConfigOption(NamedTuple):
    config: ChannelConfig
    eta_nli: float


# (total slots, total eta, chosen options)
_Choice = Tuple[int, float, Tuple[ConfigOption, ...]]


def _rate_multisets(rates: Sequence[int], count: int, low: float, high: float) -> Iterator[Dict[int, int]]:
    """ Yields datarate multiplicities with `count` items whose sum lies in [low, high). rates is descending. """

    chosen = {}

    def branch(index, remaining, total):
        if remaining == 0:
            if low <= total < high:
                yield dict(chosen)
            return
        if index == len(rates):
            return
        rate = rates[index]
        # the remaining items can contribute at most `rate` each from here on
        if total + remaining * rate < low:
            return
        if total + remaining * rates[-1] >= high:
            return
        for m in range(remaining, -1, -1):
            if m:
                chosen[rate] = m
            yield from branch(index + 1, remaining - m, total + m * rate)
            chosen.pop(rate, None)

    yield from branch(0, count, 0)


def _pareto(choices: List[_Choice], budget: Optional[float]) -> List[_Choice]:
    """ Keeps the (slots, eta)-minimal choices that respect the budget. """

    result = []
    best_eta = math.inf
    for choice in sorted(choices, key=lambda c: (c[0], c[1])):
        if budget is not None and choice[1] > budget:
            continue
        if choice[1] < best_eta:
            result.append(choice)
            best_eta = choice[1]
    return result


class _Assigner:
    def __init__(self, groups: Dict[int, List[ConfigOption]], budget: Optional[float]):
        self.groups = groups
        self.budget = budget
        self.fronts = {}  # type: Dict[Tuple[int, int], List[_Choice]]

    def _best_single(self, rate: int) -> ConfigOption:
        return min(self.groups[rate], key=lambda o: (o.config.slot_count, o.eta_nli))

    def front(self, rate: int, multiplicity: int) -> List[_Choice]:
        """ Pareto set of all multisets of `multiplicity` options sharing one datarate. A dominated multiset never
          extends to a non-dominated one, so each front grows from the previous one. """

        key = (rate, multiplicity)
        if key not in self.fronts:
            if multiplicity == 0:
                self.fronts[key] = [(0, 0.0, ())]
            else:
                combined = [(s + o.config.slot_count, e + o.eta_nli, c + (o,))
                            for s, e, c in self.front(rate, multiplicity - 1) for o in self.groups[rate]]
                self.fronts[key] = _pareto(combined, self.budget)
        return self.fronts[key]

    def assign(self, counts: Dict[int, int]) -> Optional[_Choice]:
        # without a binding budget the cheapest option per item is optimal
        simple = []
        for rate, m in counts.items():
            simple.extend([self._best_single(rate)] * m)
        slots = sum(o.config.slot_count for o in simple)
        eta = sum(o.eta_nli for o in simple)
        if self.budget is None or eta <= self.budget:
            return slots, eta, tuple(simple)

        lowest = sum(m * min(o.eta_nli for o in self.groups[rate]) for rate, m in counts.items())
        if lowest > self.budget:
            return None

        merged = [(0, 0.0, ())]  # type: List[_Choice]
        for rate, m in sorted(counts.items(), reverse=True):
            combined = []
            for s1, e1, c1 in merged:
                for s2, e2, c2 in self.front(rate, m):
                    combined.append((s1 + s2, e1 + e2, c1 + c2))
            merged = _pareto(combined, self.budget)
            if not merged:
                return None
        return merged[0]


def canonical(configs: Sequence[ChannelConfig]) -> List[ChannelConfig]:
    return sorted(configs, key=lambda c: (-c.datarate, c.slot_count, -c.bits_per_symbol, c.overhead))


def solve_additions(theta: float, options: Sequence[ConfigOption], nli_budget: Optional[float],
                    delta: float = 100) -> Optional[List[ChannelConfig]]:
    """ Returns the optimal multiset of configurations (canonically sorted), [] when theta <= 0, or None when the
      instance is infeasible. nli_budget=None waives the NLI constraint. """

    if theta <= 0:
        return []
    if not options:
        return None

    groups = defaultdict(list)
    for option in options:
        groups[option.config.datarate].append(option)
    rates = sorted(groups, reverse=True)
    n_low = max(1, math.ceil(theta / rates[0]))
    n_high = math.ceil((theta + delta) / rates[-1])
    assigner = _Assigner(groups, nli_budget)
    min_eta = min(o.eta_nli for o in options)

    for n in range(n_low, n_high + 1):
        if nli_budget is not None and n * min_eta > nli_budget:
            break
        best = None
        for counts in _rate_multisets(rates, n, theta, theta + delta):
            total_rate = sum(rate * m for rate, m in counts.items())
            if best is not None and total_rate > best[0]:
                continue
            choice = assigner.assign(counts)
            if choice is None:
                continue
            key = (total_rate, choice[0], choice[1])
            if best is None or key < best[0:3]:
                best = (total_rate, choice[0], choice[1], choice[2])
        if best is not None:
            return canonical([o.config for o in best[3]])
    return None
