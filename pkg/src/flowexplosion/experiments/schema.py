"""Column documentation for every CSV table, rendered into SCHEMA.md."""

from __future__ import annotations

from .. import __version__

SCHEMA_VERSION = 1

COLUMN_DOCS = {
    "A": "flow amplitude multiplying u in -Delta phi + A u.grad phi",
    "resolution": "nodes along the longer side of the domain bounding box",
    "n_unknowns": "number of interior (unknown) nodes",
    "lambda_star": "explosion threshold from bisection (midpoint of the final bracket)",
    "bracket_lo": "largest probed lambda whose minimal-solution iteration converged",
    "bracket_hi": "smallest probed lambda that blew up or hit the iteration limit",
    "bound_lower": "supersolution lower bound s*/(2 g(0) theta), g(s*) = 2 g(0)",
    "bound_upper": "eigenvalue upper bound mu1/g'(0)",
    "exact": "reference value of the threshold",
    "rel_error": "|lambda_star - exact| / exact",
    "tolerance": "relative tolerance asserted for this row",
    "case": "configuration label of the sweep",
    "nonlinearity": "nonlinearity catalog name",
    "incompressible": "declared incompressibility flag of the flow",
    "flow": "flow catalog name",
    "probes": "probed lambda values with their status, 'lambda:status' separated by ';'",
    "sup_phi_0.9": "max of the minimal solution at 0.9 lambda_star",
    "kappa1_0.9": "principal eigenvalue of the linearised operator at 0.9 lambda_star",
    "theta": "maximum of the exit time tau",
    "mu1": "principal eigenvalue of the adjoint operator",
    "sandwich_ok": "bound_lower <= lambda_star <= 1.05 bound_upper",
    "lambda_domain": "threshold of the whole domain",
    "min_cell": "minimum over cells of the per-cell thresholds",
    "argmin_cell": "1-based index of the cell attaining min_cell",
    "gap": "|lambda_domain - min_cell| / min_cell",
    "freidlin_min": "minimum over cells of the effective one-dimensional thresholds",
    "h": "stream-function level",
    "T": "turnover time, minus the derivative of the superlevel area",
    "p": "contour integral of |grad Psi| on the level, via the area integral of -Laplacian",
    "P": "cumulative integral of 1/p from 0 to h",
    "lambda": "lambda at which the solution was computed",
    "equidistribution": "integral of |u.grad phi|^2 over the domain",
    "sup_phi": "max of the minimal solution",
    "skeleton_max": "max of the exit time over the separatrix band |Psi| <= eps_sep",
    "interior_max": "max of the exit time over all interior nodes",
    "ratio": "skeleton_max / interior_max",
    "n_skeleton": "number of interior nodes in the separatrix band",
    "n_interior": "number of interior nodes",
    "n": "radial flow parameter, u = 4 n x",
    "uniformity_checked": "whether the flow-uniform exit-time bound applies (incompressible rows only)",
    "uniformity_ok": "theta <= 1.05 theta(first row) where checked, nan otherwise",
}


def _doc(col: str) -> str:
    if col.startswith("lambda_cell"):
        return f"threshold of cell {col[len('lambda_cell'):]} alone, Dirichlet data on its separatrix"
    if col.startswith("freidlin_cell"):
        return f"effective one-dimensional threshold of cell {col[len('freidlin_cell'):]}"
    return COLUMN_DOCS.get(col, "")


def schema_markdown(tables) -> str:
    """``tables`` is a list of (experiment, Table)."""
    out = [f"# CSV schema (flowexplosion {__version__}, schema version {SCHEMA_VERSION})", "",
           "Each CSV starts with one comment line `# flowexplosion <version> schema <experiment>.<table>/<n>`,",
           "then a header row.  Floats are written with full precision; `nan` marks a missing value.", ""]
    for exp, t in tables:
        out += [f"## {exp}.{t.name}", "", "| column | meaning |", "|---|---|"]
        out += [f"| `{c}` | {_doc(c)} |" for c in t.columns]
        out.append("")
    return "\n".join(out)
