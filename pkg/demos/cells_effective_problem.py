# %% [markdown]
# # Four-cell flow: per-cell thresholds and the effective problem
#
# For large amplitude the threshold of each flow cell approaches the
# threshold of a one-dimensional problem in the stream-function level h,
# with coefficients T(h) (turnover time) and p(h) (circulation of |∇Ψ|).

# %%
import numpy as np

from flowexplosion.flows import fig2_cell_centers, fig2_stream
from flowexplosion.freidlin import detect_cells, freidlin_lambda_star, level_coefficients, skeleton_mask
from flowexplosion.grid import rectangle_grid
from flowexplosion.nonlinearity import exponential

grid = rectangle_grid(2 * np.pi, 2 * np.pi, 129)
stream = fig2_stream()
cells = detect_cells(stream, grid, fig2_cell_centers())
print(f"{sum(c.n_nodes for c in cells) / grid.n_interior:.3f} of the interior lies in cells")
print(f"{skeleton_mask(stream, grid).sum() / grid.n_interior:.3f} lies on the separatrix band")

# %% [markdown]
# Coefficients per cell: T blows up as h -> 0 (the saddles), p vanishes
# linearly at the extremum.

# %%
g = exponential()
for c in cells:
    co = level_coefficients(stream, c, grid, fine_resolution=257)
    r = freidlin_lambda_star(co, g)
    print(f"cell {c.label}: sign {c.sign:+d}  T(h_min)={co.T[0]:9.2f}  p(h_max)={co.p[-1]:.4f}  "
          f"top slope {co.top_slope:.3f}  effective lambda* {r.lambda_star:.4f}")
