"""Compiled vs numpy kernel timings on a heated-cavity step.

    python benchmarks/bench_kernels.py [--cells 30] [--ntheta 16] [--lam 500] [--repeat 5]

Each kernel is timed on the solver's own buffers after a few warm-up steps,
so the states are realistic (non-uniform, with wall-adjacent slopes).
"""

import argparse
import time

import numpy as np

from atgj import kernels
from atgj.cases import preset
from atgj.quadrature import WeightParams, build_velocity_set
from atgj.solver import Solver, SolverConfig


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench(backend, args):
    case = preset("cavity-kn0.1")
    vs = build_velocity_set(8, args.ntheta, WeightParams.matched(args.lam))
    s = Solver(case.mesh(cells=args.cells), vs, case.gas(), SolverConfig(), backend=backend)
    f = s.initialize(case.initial_state())
    for _ in range(args.warmup):
        f, _ = s.advance(f)
    k, dt, m, cons = s.kern, s.time_step_size(), s.mesh, s.config.conservative
    v = f.values
    new = np.empty_like(v)

    def cell():
        k.cell_stage(v, s.fluid, s.xi, s.yi, s.w, s.gas_tuple, dt, cons, s._fbp, s._ftp, s._feq, s._macro)

    def slopes():
        k.slopes(s._fbp, s.nbr, s.xi, s.yi, m.dx, m.dy, s._sx, s._sy)

    def faces():
        k.interior_fluxes(s._fbp, s._sx, s._sy, s.facex, s.facey, s.xi, s.yi, s.w, s.gas_tuple,
                          dt, m.dx, m.dy, cons, s._Fx, s._Fy)

    def walls():
        s.apply_boundaries(s._fbp, s._sx, s._sy, dt, s._Fx, s._Fy)

    def update():
        k.update(s._ftp, s._Fx, s._Fy, s.fluid, dt, m.dx, m.dy, new)

    def step():
        s.advance(f)

    stages = {"cell_stage": cell, "slopes": slopes, "interior_fluxes": faces,
              "boundaries": walls, "update": update, "full step": step}
    return {name: best_of(fn, args.repeat) for name, fn in stages.items()}, f


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=30)
    ap.add_argument("--ntheta", type=int, default=16)
    ap.add_argument("--lam", type=float, default=500.0)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--warmup", type=int, default=5)
    args = ap.parse_args()

    names = kernels.available()
    print(f"cavity {args.cells}x{args.cells}, K = {8 * args.ntheta}, backends: {', '.join(names)}")
    results, fields = {}, {}
    for b in names:
        results[b], fields[b] = bench(b, args)
    if len(fields) == 2:
        diff = np.abs(fields["cython"].values - fields["numpy"].values).max()
        print(f"max |cython - numpy| after warm-up: {diff:.2e}")
    print(f"{'kernel':<16}" + "".join(f"{b + ' [ms]':>14}" for b in names)
          + ("     speed-up" if len(names) == 2 else ""))
    for stage in results[names[0]]:
        row = [results[b][stage] * 1e3 for b in names]
        line = f"{stage:<16}" + "".join(f"{t:14.2f}" for t in row)
        if len(names) == 2:
            line += f"{row[1] / row[0]:12.1f}x"
        print(line)


if __name__ == "__main__":
    main()
