"""
Parquet cache of Gagliardo–Nirenberg constants.

Each row records one radial solve keyed by (N, p, radius, n_points) together with the profile
diagnostics, so repeated runs skip the shooting and the metadata of the grid that produced a
constant travels with it.
"""
import os
import threading
from pathlib import Path
from typing import Optional

import pandas as pd

import components.constants as const
import utils.logger as logger
from backend.solver_models import RadialProfile
from backend.solvers.oracle import default_radius, gn_constant, solve_Wp
from utils.benchmark import Benchmark

CACHE_COLUMNS = ["N", "p", "radius", "n_points", "delta_p", "W_l2_sq", "gn_const", "shoot_value", "residual_max",
                 "pohozaev_defect", "nehari_defect"]
KEY_COLUMNS = ["N", "p", "radius", "n_points"]


class OracleCacher:
    """
    Loads and stores C₍N,p₎ rows in a single parquet file.

    Load and save failures are logged and never raised: a broken cache only costs a
    recomputation.
    """

    def __init__(self, cache_dir: Path = const.CACHE_DIRECTORY):
        self.cache_dir = Path(cache_dir)
        self.cache_file = self.cache_dir / const.GN_CACHE_FILE
        self._lock = threading.Lock()

    def cache_exists(self) -> bool:
        return self.cache_file.exists()

    def load_table(self) -> pd.DataFrame:
        if not self.cache_exists():
            return pd.DataFrame(columns=CACHE_COLUMNS)
        try:
            return pd.read_parquet(self.cache_file, engine="pyarrow")
        except Exception as e:
            logger.log(f"⚠️ Error loading constants cache: {str(e)}", indent_level=2)
            return pd.DataFrame(columns=CACHE_COLUMNS)

    def lookup(self, dim: int, p: float, radius: float, n_points: int) -> Optional[dict]:
        table = self.load_table()
        if table.empty:
            return None
        hit = table[(table["N"] == dim) & (table["p"] == p) & (table["radius"] == radius)
                    & (table["n_points"] == n_points)]
        if hit.empty:
            return None
        logger.log(f"ℹ️ C₍{dim},{p:g}₎ loaded from cache", indent_level=2)
        return hit.iloc[0].to_dict()

    def store(self, row: dict) -> bool:
        with self._lock:
            try:
                if not self.cache_dir.exists():
                    os.makedirs(self.cache_dir, exist_ok=True)
                    logger.log(f"ℹ️ Created cache directory: {self.cache_dir}", indent_level=2)
                table = self.load_table()
                table = pd.concat([table, pd.DataFrame([row], columns=CACHE_COLUMNS)], ignore_index=True)
                table = table.drop_duplicates(subset=KEY_COLUMNS, keep="last")
                table.to_parquet(self.cache_file, engine="pyarrow", index=False)
                return True
            except Exception as e:
                logger.log(f"⚠️ Error saving constants cache: {str(e)}", indent_level=2)
                return False


def profile_row(profile: RadialProfile) -> dict:
    return {
        "N": profile.dim,
        "p": profile.p,
        "radius": float(profile.radii[-1]),
        "n_points": len(profile.radii),
        "delta_p": profile.dim * (profile.p - 2.0) / (2.0 * profile.p),
        "W_l2_sq": profile.l2_sq,
        "gn_const": gn_constant(profile),
        "shoot_value": profile.shoot_value,
        "residual_max": profile.residual_max,
        "pohozaev_defect": profile.pohozaev_defect,
        "nehari_defect": profile.nehari_defect,
    }


def cached_gn_constant(dim: int, p: float, radius: float = 0.0, n_points: int = const.ORACLE_MIN_POINTS,
                       cacher: Optional[OracleCacher] = None) -> dict:
    """
    Returns the constants row for (N, p), solving and storing it on a cache miss.

    Args:
        radius: Outer radius of the radial grid; 0 selects the decay-aware default.
    """
    cacher = cacher or OracleCacher()
    radius = radius or default_radius(dim, p)
    row = cacher.lookup(dim, p, radius, n_points)
    if row is not None:
        return row
    benchmark = Benchmark(f"C₍{dim},{p:g}₎ computation")
    row = profile_row(solve_Wp(dim, p, radius, n_points))
    if cacher.store(row):
        logger.log(f"✅ C₍{dim},{p:g}₎ = {row['gn_const']:.12f} cached", indent_level=2)
    benchmark.print_time(level=2)
    return row
