"""Bag-of-visual-words: codebook learning and histogram scoring.

Local descriptors are simulated as draws around hidden prototypes; real
use feeds SIFT-like descriptors or CNN patches through the same API.

Run: python3 demos/03_visual_codebook.py
"""

import numpy as np

from interfuse import visual


def synth_image(rng, image_id, prototypes, weights, n=40):
    """Sample descriptors from a per-image mixture of prototypes."""
    choices = rng.choice(len(prototypes), size=n, p=weights)
    descriptors = prototypes[choices] + rng.normal(0.0, 0.25, size=(n, 16))
    return visual.DescriptorSet(image_id, descriptors)


def main():
    rng = np.random.default_rng(7)
    prototypes = rng.uniform(-3.0, 3.0, size=(4, 16))

    beach = [synth_image(rng, f"beach{i}", prototypes,
                         [0.7, 0.2, 0.05, 0.05]) for i in range(3)]
    hills = [synth_image(rng, f"hill{i}", prototypes,
                         [0.05, 0.05, 0.2, 0.7]) for i in range(3)]
    library = beach + hills

    codebook = visual.learn_codebook(library, k=4, seed=11)
    print(f"codebook: K={codebook.k}, dim={codebook.dim}, "
          f"{codebook.n_iters} Lloyd iterations")
    print("inertia per iteration (non-increasing):")
    for i, inertia in enumerate(codebook.inertia_per_iter):
        print(f"  iter {i}: {inertia:.2f}")

    print("\nL2-normalized visual-word histograms:")
    hists = {}
    for ds in library:
        hist = visual.quantize(ds, codebook)
        hists[ds.image_id] = hist
        pretty = ", ".join(f"{v:.2f}" for v in hist.values)
        print(f"  {ds.image_id}: [{pretty}]")

    print("\nCosine between histograms separates the two scenes:")
    query = hists["beach0"]
    for image_id in sorted(hists):
        if image_id == "beach0":
            continue
        score = visual.image_score(query, hists[image_id])
        print(f"  beach0 vs {image_id}: {score:.4f}")

    print("\nMultiple sample images per query aggregate with max or mean:")
    scores = [visual.image_score(hists["beach1"], hists[i])
              for i in ("hill0", "hill1", "hill2")]
    print(f"  per-image: {[f'{s:.4f}' for s in scores]}")
    print(f"  max:  {visual.aggregate_query_images(scores, 'max'):.4f}")
    print(f"  mean: {visual.aggregate_query_images(scores, 'mean'):.4f}")


if __name__ == "__main__":
    main()
