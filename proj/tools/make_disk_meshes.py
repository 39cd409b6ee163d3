#!/usr/bin/env python3
"""Generate the irregular graded disk meshes bundled under meshes/.

The solver's built-in disk generator produces structured, ring-aligned
triangulations.  Those are noticeably more accurate than the irregular
meshes produced by force-equilibrium generators, so the 2D convergence
presets ship fixed irregular meshes instead; this script is their
reproducible source.

Algorithm: classic force-based smoothing (Persson-Strang style).  Points
are seeded by rejection sampling against a radial sizing function that
coarsens toward the centre, then relaxed as a truss of repulsive springs
with periodic Delaunay retriangulation; points pushed past the circle are
projected back onto it.  Everything is driven by numpy's seeded generator,
so a given (n, radius, grading, seed) quadruple always yields the same
mesh.

Usage:
  make_disk_meshes.py --bundle [--outdir meshes]     # write the shipped set
  make_disk_meshes.py --n 516 --radius 1.46 --grading 2.5 --seed 7 --out m.txt
"""

import argparse
import math
import sys

import numpy as np
from scipy.spatial import Delaunay

# Frozen parameters of the shipped meshes: name -> (n, radius, grading, seed).
# Radii are the initial support radii of the self-similar datum (C0 = 0.1,
# t0 = 1) for the exponent each mesh is used with: sqrt(2*d*alpha*C0/(k*(alpha-1)))
# with k = 1/(alpha - 1 + 2/d), d = 2.
#
# The convergence-ladder meshes use a numerically uniform sizing (grading
# 1.0001, kept exactly as generated); the extra *_graded mesh refines toward
# the rim and is used for the long-horizon pointwise-error preset.  Seeds pick
# representative realizations of the generator; the solver's measured errors
# on other seeds differ by a few percent.
RADIUS_A2 = math.sqrt(1.6)        # alpha = 2
RADIUS_A4 = math.sqrt(1.6 / 0.75)  # alpha = 4

BUNDLE = {
    "disk_a2_n132": (132, RADIUS_A2, 1.0001, 1),
    "disk_a2_n524": (524, RADIUS_A2, 1.0001, 2),
    "disk_a2_n2103": (2103, RADIUS_A2, 1.0001, 5),
    "disk_a4_n135": (135, RADIUS_A4, 1.0001, 8),
    "disk_a4_n516": (516, RADIUS_A4, 1.0001, 12),
    "disk_a4_n2124": (2124, RADIUS_A4, 1.0001, 3),
    "disk_a4_n516_graded": (516, RADIUS_A4, 2.5, 1),
}


def sizing(p, radius, grading):
    """Relative desired edge length: `grading` at the centre, 1 at the rim."""
    r = np.linalg.norm(p, axis=1) / radius
    return grading + (1.0 - grading) * r


def seed_points(n, radius, grading, rng):
    pts = np.empty((0, 2))
    while len(pts) < n:
        cand = rng.uniform(-radius, radius, size=(8 * n, 2))
        cand = cand[np.linalg.norm(cand, axis=1) < radius]
        accept = rng.uniform(size=len(cand)) < (1.0 / sizing(cand, radius, grading)) ** 2
        pts = np.vstack([pts, cand[accept]])
    return pts[:n]


def triangulate(p):
    t = Delaunay(p).simplices
    # enforce counter-clockwise orientation
    d0 = p[t[:, 1]] - p[t[:, 0]]
    d1 = p[t[:, 2]] - p[t[:, 0]]
    flip = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0] < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t


def edges_of(t):
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def relax(p, radius, grading, sweeps=400, fscale=1.2, dt=0.2, ttol=0.1):
    n = len(p)
    h0 = math.sqrt(math.pi * radius * radius / n)
    pold = np.full_like(p, np.inf)
    bars = None
    for _ in range(sweeps):
        if np.max(np.linalg.norm(p - pold, axis=1)) / h0 > ttol:
            pold = p.copy()
            bars = edges_of(triangulate(p))
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        L = np.linalg.norm(vec, axis=1)
        hbar = sizing(0.5 * (p[bars[:, 0]] + p[bars[:, 1]]), radius, grading)
        L0 = hbar * fscale * math.sqrt(np.sum(L**2) / np.sum(hbar**2))
        f = np.maximum(L0 - L, 0.0)
        fvec = (f / L)[:, None] * vec
        force = np.zeros_like(p)
        np.add.at(force, bars[:, 0], fvec)
        np.add.at(force, bars[:, 1], -fvec)
        p = p + dt * force
        r = np.linalg.norm(p, axis=1)
        out = r > radius
        p[out] *= (radius / r[out])[:, None]
    return p


def quality(p, t):
    a = np.linalg.norm(p[t[:, 1]] - p[t[:, 0]], axis=1)
    b = np.linalg.norm(p[t[:, 2]] - p[t[:, 1]], axis=1)
    c = np.linalg.norm(p[t[:, 0]] - p[t[:, 2]], axis=1)
    return (b + c - a) * (c + a - b) * (a + b - c) / (a * b * c)


def generate(n, radius, grading, seed, sweeps=400):
    rng = np.random.default_rng(seed)
    p = seed_points(n, radius, grading, rng)
    p = relax(p, radius, grading, sweeps=sweeps)
    t = triangulate(p)
    q = quality(p, t)
    if q.min() <= 0.05:
        print(f"warning: seed {seed}: worst element quality {q.min():.3f}", file=sys.stderr)
    return p, t, q


def write_mesh(path, p, t, header):
    with open(path, "w") as out:
        out.write(f"# {header}\n")
        out.write(f"nodes {len(p)}\n")
        for x, y in p:
            out.write(f"{x:.17g} {y:.17g}\n")
        out.write(f"elements {len(t)}\n")
        for i, j, k in t:
            out.write(f"{i} {j} {k}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bundle", action="store_true", help="write the full shipped mesh set")
    ap.add_argument("--outdir", default="meshes", help="directory for --bundle output")
    ap.add_argument("--n", type=int, help="node count")
    ap.add_argument("--radius", type=float, help="disk radius")
    ap.add_argument("--grading", type=float, default=2.5,
                    help="centre-to-rim desired edge length ratio (>1 refines the rim)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--sweeps", type=int, default=400)
    ap.add_argument("--out", help="output mesh file (single-mesh mode)")
    args = ap.parse_args()

    if args.bundle:
        import os
        os.makedirs(args.outdir, exist_ok=True)
        for name, (n, radius, grading, seed) in BUNDLE.items():
            p, t, q = generate(n, radius, grading, seed)
            hdr = (f"irregular graded disk mesh: radius {radius:.12g}, grading {grading}, "
                   f"seed {seed}; regenerate with tools/make_disk_meshes.py --bundle")
            path = os.path.join(args.outdir, name + ".txt")
            write_mesh(path, p, t, hdr)
            print(f"{path}: {len(p)} nodes, {len(t)} elements, "
                  f"quality min {q.min():.3f} mean {q.mean():.3f}")
        return

    if args.n is None or args.radius is None or args.out is None:
        ap.error("single-mesh mode needs --n, --radius, --out")
    p, t, q = generate(args.n, args.radius, args.grading, args.seed, sweeps=args.sweeps)
    hdr = (f"irregular graded disk mesh: radius {args.radius:.12g}, grading {args.grading}, "
           f"seed {args.seed}")
    write_mesh(args.out, p, t, hdr)
    print(f"{args.out}: {len(p)} nodes, {len(t)} elements, "
          f"quality min {q.min():.3f} mean {q.mean():.3f}")


if __name__ == "__main__":
    main()
