"""When can the sending influences be recovered?  A rank census.

The inverse problem is solvable exactly when the augmented system matrix
has full column rank.  Two regimes illustrate the dichotomy:

* structured Gaussian models (every sub-network shares the same likelihood
  family) collapse to rank 2 no matter how many hypotheses or sub-networks
  exist, so only the two-sub-network case is ever identifiable;
* independently perturbed (diversity) models are full rank in every draw,
  so identifiability holds whenever there are at least as many hypotheses
  as sending sub-networks.

Run:  python3 demos/03_identifiability.py
"""

import numpy as np

from weaklearn import build_system, diversity_model, structured_gaussian_model

rng = np.random.default_rng(0)
DRAWS = 50


def rank_census(model: str, n_sending: int, n_hypotheses: int) -> dict[int, int]:
    counts: dict[int, int] = {}
    for _ in range(DRAWS):
        if model == "gaussian":
            while True:  # distinct means
                means = rng.uniform(-5, 5, size=n_hypotheses)
                if np.min(np.abs(np.subtract.outer(means, means) + np.eye(n_hypotheses))) > 0.05:
                    break
            _, D = structured_gaussian_model(means, n_sending)
        else:
            _, D = diversity_model(
                n_hypotheses,
                n_sending,
                np.arange(1.0, n_hypotheses + 1.0),
                perturb_range=0.1,
                seed=int(rng.integers(2**32)),
            )
        for theta in range(1, n_hypotheses + 1):
            sys_k = build_system(D, theta, np.zeros(n_hypotheses))
            counts[sys_k.rank] = counts.get(sys_k.rank, 0) + 1
    return counts


print(f"rank of the augmented system over {DRAWS} random draws (all minimizers):\n")
print(f"{'model':<10} {'S':>2} {'H':>2}   rank counts          identifiable?")
for model in ("gaussian", "diversity"):
    for S, H in ((2, 2), (2, 4), (3, 3), (3, 5), (4, 4), (4, 6)):
        counts = rank_census(model, S, H)
        total = sum(counts.values())
        pretty = ", ".join(f"rank {r}: {c}" for r, c in sorted(counts.items()))
        verdict = "yes" if counts.get(S, 0) == total else "no (rank-deficient)"
        print(f"{model:<10} {S:>2} {H:>2}   {pretty:<20}  {verdict}")
    print()

print("the same census is available from the command line:")
print("  weaklearn rank-scan --model gaussian  --s-range 2:4 --h-range 2:6 --draws 50")
print("  weaklearn rank-scan --model diversity --s-range 2:4 --h-range 2:6 --draws 50")
