"""Write Google-style random circuit instance files (the bundled ``inst_*`` data).

Layout follows the 2016 supremacy circuits: an H layer, then cycles cycling
through eight CZ patterns on a rows x cols grid. A qubit left out of the
current CZ pattern gets a T if it has not had a single-qubit gate since its
last CZ, otherwise a random X^1/2 or Y^1/2 different from its previous one.

    python tools/make_rqc.py ROWS COLS DEPTH SEED > inst_RxC_D_S.txt
"""
import random
import sys


def cz_patterns(rows, cols):
    def q(r, c):
        return r * cols + c

    pats = []
    # horizontal bonds split into four staggered sets, then vertical likewise
    for off_c, parity in ((0, 0), (1, 1), (1, 0), (0, 1)):
        pats.append([(q(r, c), q(r, c + 1)) for r in range(rows) for c in range(off_c, cols - 1, 2)
                     if r % 2 == parity])
    for off_r, parity in ((0, 0), (1, 1), (1, 0), (0, 1)):
        pats.append([(q(r, c), q(r + 1, c)) for c in range(cols) for r in range(off_r, rows - 1, 2)
                     if c % 2 == parity])
    return [p for p in pats if p]


def instance(rows, cols, depth, seed):
    rng = random.Random(seed)
    n = rows * cols
    lines = [str(n)] + [f"0 h {i}" for i in range(n)]
    pats = cz_patterns(rows, cols)
    had_cz = [False] * n
    had_t = [False] * n
    last = [None] * n
    for cycle in range(1, depth + 1):
        pat = pats[(cycle - 1) % len(pats)]
        busy = {a for a, b in pat} | {b for a, b in pat}
        for a, b in pat:
            lines.append(f"{cycle} cz {a} {b}")
        for i in range(n):
            if i in busy or not had_cz[i]:
                continue
            if not had_t[i]:
                g = "t"
                had_t[i] = True
            else:
                g = rng.choice([x for x in ("x_1_2", "y_1_2") if x != last[i]])
            last[i] = g
            lines.append(f"{cycle} {g} {i}")
            had_cz[i] = False
        for i in busy:
            had_cz[i] = True
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    r, c, d, s = map(int, sys.argv[1:5])
    sys.stdout.write(instance(r, c, d, s))
