"""Walk the interference rule table and the fused-score formula.

Run: python3 demos/01_interference_rules.py
"""

import numpy as np

from interfuse import fusion

T_LOWER = 0.01
T_UPPER = 0.30


def show(label, p_text, p_image):
    rule, cos_theta = fusion.interference_rule(p_text, p_image,
                                               T_LOWER, T_UPPER)
    classical = p_text + p_image
    quantum = fusion.interference_score(p_text, p_image, cos_theta)
    print(f"{label:<28} pT={p_text:.3f} pV={p_image:.3f} "
          f"rule={rule:<4} cos={cos_theta:+d}  "
          f"classical={classical:.4f}  quantum={quantum:.4f}")


def main():
    print(f"thresholds: T_L={T_LOWER}, T_U={T_UPPER}\n")

    print("The four rules (all comparisons strict):")
    show("R1 both channels agree", 0.36, 0.04)
    show("R2 text only", 0.40, 0.001)
    show("R3 image only", 0.004, 0.45)
    show("R4 both weak", 0.12, 0.004)
    show("no rule: mid band", 0.12, 0.12)

    print("\nBoundary values never fire a rule:")
    show("pT exactly at T_U", T_UPPER, 0.04)
    show("pV exactly at T_L", 0.36, T_LOWER)

    print("\nThe cross term is 2*sqrt(pT*pV)*cos(theta); cos=+1 rewards")
    print("agreement, cos=-1 penalizes conflicting channels, cos=0")
    print("reduces the score to the classical sum.")

    rng = np.random.default_rng(42)
    samples = rng.uniform(0.0, 0.5, size=(5, 2))
    print("\nMonotone in cos(theta) for any operating point:")
    for p_text, p_image in samples:
        lo = fusion.interference_score(p_text, p_image, -1)
        mid = fusion.interference_score(p_text, p_image, 0)
        hi = fusion.interference_score(p_text, p_image, +1)
        print(f"  pT={p_text:.3f} pV={p_image:.3f}: "
              f"{lo:.4f} <= {mid:.4f} <= {hi:.4f}")


if __name__ == "__main__":
    main()
