import csv
import logging
import os
from typing import Union

from app.modules.models import Taxonomy
from app.modules.pca import pca2
from app.modules.report_models import Projection2D, ProjectionRow
from app.modules.vectorizers import Vectorizer

logger = logging.getLogger(__name__)

PCA_COLUMNS = ("code", "title", "x", "y", "female_share")


def emit_projection(taxonomy: Taxonomy, vectorizer: Vectorizer, method: str = "svd") -> Projection2D:
    """Projects every occupation's full skill text; unlabeled occupations stay in the plot."""
    vectors = {
        code: vectorizer.transform(taxonomy.occupations[code].skill_text, key=code)
        for code in taxonomy.codes
    }
    uncovered = sum(1 for v in vectors.values() if v.warnings)
    if uncovered:
        logger.warning(f"{uncovered} occupation vector(s) without word-vector coverage (zero vector used)")

    projection = pca2(vectors, method=method)
    rows = []
    for row in projection.rows:
        occ = taxonomy.occupations[row.code]
        rows.append(ProjectionRow(code=row.code, title=occ.title, x=row.x, y=row.y, female_share=occ.female_share))

    unlabeled = sum(1 for r in rows if not r.labeled)
    logger.info(
        f"Projected {len(rows)} occupations with {vectorizer.name} "
        f"(explained variance {projection.explained_variance[0]:.4g}, {projection.explained_variance[1]:.4g}); "
        f"{unlabeled} unlabeled"
    )
    return projection.model_copy(update={"rows": rows})


def write_projection_csv(projection: Projection2D, path: Union[str, os.PathLike]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PCA_COLUMNS)
        for row in projection.rows:
            share = "" if row.female_share is None else repr(row.female_share)
            writer.writerow([row.code, row.title, repr(row.x), repr(row.y), share])
