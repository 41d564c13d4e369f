"""Time the rate search on the compiled and pure-Python backends.

    python3 benchmarks/bench_search.py --nodes 6 7 --repeat 3

Each case solves every lambda_target in the grid once per repetition; the
best repetition is reported. Both backends must return the same tuple.
"""
import argparse
import time

import numpy as np

from wireless_dpsgd import _backend
from wireless_dpsgd.optimizer import CandidateTable, FEASIBILITY_TOL
from wireless_dpsgd.propagation import RadioParams, build_channel_matrix, six_node_layout, random_layout


def cases(node_counts, layouts, seed):
    yield "six-node", six_node_layout()
    rng = np.random.default_rng(seed)
    for n in node_counts:
        for k in range(layouts):
            yield f"random n={n} #{k}", random_layout(n, rng)


def time_backend(impl, table, targets, repeat):
    best = float("inf")
    results = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = [impl.search(table.inv_rates, table.rows, table.counts, lt, False, FEASIBILITY_TOL) for lt in targets]
        best = min(best, time.perf_counter() - t0)
        results = out
    return best, results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--nodes", type=int, nargs="+", default=[6])
    ap.add_argument("--layouts", type=int, default=3, help="random layouts per node count")
    ap.add_argument("--epsilon", type=float, default=4.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = sorted(_backend.BACKENDS)
    if "cython" not in names:
        print("compiled backend not built; timing the Python search only")
    targets = [round(0.1 * k, 1) for k in range(1, 10)]
    radio = RadioParams(path_loss_index=args.epsilon)

    header = f"{'case':<18}{'tuples':>10}" + "".join(f"{n + ' s':>12}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, layout in cases(args.nodes, args.layouts, args.seed):
        table = CandidateTable.build(build_channel_matrix(layout, radio))
        times, outs = {}, {}
        for name in names:
            times[name], outs[name] = time_backend(_backend.get(name), table, targets, args.repeat)
        if len(names) > 1:
            a, b = (outs[n] for n in names)
            if [r[0] and tuple(r[0]) for r in a] != [r[0] and tuple(r[0]) for r in b]:
                raise SystemExit(f"{label}: backends disagree")
        row = f"{label:<18}{int(np.prod(table.counts)):>10}" + "".join(f"{times[n]:>12.4f}" for n in names)
        if len(names) > 1:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
