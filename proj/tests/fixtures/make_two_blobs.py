"""Regenerates two_blobs.csv: 50 + 50 Gaussian points in 3-D plus 10 uniform
noise points, labelled by scikit-learn's HDBSCAN (min_cluster_size=5).

scikit-learn counts the point itself in min_samples, so min_samples=6 there
corresponds to min_samples=5 (the default, equal to min_cluster_size) in cast.
"""

import numpy as np
from sklearn.cluster import HDBSCAN

rng = np.random.default_rng(20240517)
a = rng.normal(loc=(0.0, 0.0, 0.0), scale=0.6, size=(50, 3))
b = rng.normal(loc=(6.0, 5.0, -4.0), scale=0.8, size=(50, 3))
noise = rng.uniform(low=-10.0, high=14.0, size=(10, 3))
points = np.vstack([a, b, noise])

labels = HDBSCAN(min_cluster_size=5, min_samples=6).fit(points).labels_

with open("two_blobs.csv", "w") as f:
    f.write("x,y,z,label\n")
    for p, l in zip(points, labels):
        f.write(f"{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},{l}\n")
