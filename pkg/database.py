#!/usr/bin/env python3
"""
Database module for caching c_∞ estimates and normalizer tables.
"""

import sqlite3
import hashlib
from typing import Dict, Any, Optional

from utils import CacheMiss


class ExperimentDatabase:
    """SQLite database for estimates that later experiments depend on."""

    def __init__(self, db_path: str = "evt_cache.db"):
        """
        Initialize the database.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = db_path
        self.init_database()

    def init_database(self):
        """Initialize database tables."""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            # c_infty table - one row per estimation run, keyed by full provenance
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS c_infty (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_key TEXT UNIQUE NOT NULL,
                    beta REAL NOT NULL,
                    law_kind TEXT NOT NULL,
                    law_value REAL NOT NULL,
                    n INTEGER NOT NULL,
                    reps INTEGER NOT NULL,
                    seed INTEGER NOT NULL,
                    route_a REAL NOT NULL,
                    route_a_se REAL NOT NULL,
                    route_b REAL NOT NULL,
                    route_b_se REAL NOT NULL,
                    series REAL,
                    date_added TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            # Normalizers table - a_n, b_n per horizon and c_inf
            cursor.execute('''
                CREATE TABLE IF NOT EXISTS normalizers (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    params_key TEXT NOT NULL,
                    n INTEGER NOT NULL,
                    c_inf REAL NOT NULL,
                    w_n REAL NOT NULL,
                    theta_n REAL NOT NULL,
                    a_n REAL NOT NULL,
                    b_n REAL NOT NULL,
                    date_added TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    UNIQUE (params_key, n, c_inf)
                )
            ''')

            cursor.execute('CREATE INDEX IF NOT EXISTS idx_c_infty_law ON c_infty (beta, law_kind, law_value)')
            cursor.execute('CREATE INDEX IF NOT EXISTS idx_normalizers_params ON normalizers (params_key)')

            conn.commit()

    def generate_key(self, *parts: Any) -> str:
        """Generate a provenance key from the given parts."""
        content = "|".join(repr(p) for p in parts)
        return hashlib.md5(content.encode()).hexdigest()

    def save_c_infty(self, beta: float, law_kind: str, law_value: float, n: int, reps: int, seed: int,
                     route_a: float, route_a_se: float, route_b: float, route_b_se: float,
                     series: Optional[float] = None) -> str:
        """
        Store one c_∞ estimation run, replacing an earlier run with the same provenance.

        Returns:
            Run key
        """
        run_key = self.generate_key(beta, law_kind, law_value, n, reps, seed)
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('DELETE FROM c_infty WHERE run_key = ?', (run_key,))
            cursor.execute('''
                INSERT INTO c_infty (run_key, beta, law_kind, law_value, n, reps, seed,
                                     route_a, route_a_se, route_b, route_b_se, series)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ''', (run_key, beta, law_kind, law_value, n, reps, seed,
                  route_a, route_a_se, route_b, route_b_se, series))
            conn.commit()
        return run_key

    @staticmethod
    def _c_infty_row(row) -> Dict[str, Any]:
        keys = ('beta', 'law_kind', 'law_value', 'n', 'reps', 'seed',
                'route_a', 'route_a_se', 'route_b', 'route_b_se', 'series', 'date_added')
        entry = dict(zip(keys, row))
        # inverse-variance pooled value of the two routes
        wa = 1.0 / max(entry['route_a_se'], 1e-12) ** 2
        wb = 1.0 / max(entry['route_b_se'], 1e-12) ** 2
        entry['value'] = (wa * entry['route_a'] + wb * entry['route_b']) / (wa + wb)
        return entry

    def get_c_infty(self, beta: float, law_kind: str, law_value: float, n: int, reps: int,
                    seed: int) -> Optional[Dict[str, Any]]:
        """Exact-provenance lookup; None when absent."""
        run_key = self.generate_key(beta, law_kind, law_value, n, reps, seed)
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                SELECT beta, law_kind, law_value, n, reps, seed, route_a, route_a_se,
                       route_b, route_b_se, series, date_added
                FROM c_infty WHERE run_key = ?
            ''', (run_key,))
            row = cursor.fetchone()
            return self._c_infty_row(row) if row else None

    def latest_c_infty(self, beta: float, law_kind: str, law_value: float) -> Optional[Dict[str, Any]]:
        """Most recent estimate for exactly this (β, law); never one from another law."""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                SELECT beta, law_kind, law_value, n, reps, seed, route_a, route_a_se,
                       route_b, route_b_se, series, date_added
                FROM c_infty
                WHERE beta = ? AND law_kind = ? AND law_value = ?
                ORDER BY date_added DESC, id DESC
                LIMIT 1
            ''', (beta, law_kind, law_value))
            row = cursor.fetchone()
            return self._c_infty_row(row) if row else None

    def require_c_infty(self, beta: float, law_kind: str, law_value: float) -> Dict[str, Any]:
        """Like latest_c_infty, but a miss raises CacheMiss naming the command to run first."""
        entry = self.latest_c_infty(beta, law_kind, law_value)
        if entry is None:
            raise CacheMiss(
                f"no cached c_infty for beta={beta}, L={law_kind}({law_value}); "
                f"run 'python main.py estimate-cinf' first"
            )
        return entry

    def save_normalizers(self, params_key: str, table) -> None:
        """
        Save a normalizer table.

        Args:
            params_key: Key of the model parameters the table belongs to
            table: NormalizerTable
        """
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                INSERT OR REPLACE INTO normalizers (params_key, n, c_inf, w_n, theta_n, a_n, b_n)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', (params_key, table.n, table.c_inf, table.w_n, table.theta_n, table.a_n, table.b_n))
            conn.commit()

    def get_normalizers(self, params_key: str, n: int, c_inf: float) -> Optional[Dict[str, Any]]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()
            cursor.execute('''
                SELECT n, c_inf, w_n, theta_n, a_n, b_n FROM normalizers
                WHERE params_key = ? AND n = ? AND c_inf = ?
            ''', (params_key, n, c_inf))
            row = cursor.fetchone()
            if not row:
                return None
            return dict(zip(('n', 'c_inf', 'w_n', 'theta_n', 'a_n', 'b_n'), row))

    def get_stats(self) -> Dict[str, Any]:
        """
        Get cache statistics.

        Returns:
            Dictionary with statistics
        """
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            cursor.execute('SELECT COUNT(*) FROM c_infty')
            c_infty_runs = cursor.fetchone()[0]

            cursor.execute('SELECT COUNT(*) FROM normalizers')
            normalizer_rows = cursor.fetchone()[0]

            cursor.execute('SELECT law_kind, COUNT(*) FROM c_infty GROUP BY law_kind')
            laws = dict(cursor.fetchall())

            return {
                'c_infty_runs': c_infty_runs,
                'normalizer_rows': normalizer_rows,
                'laws': laws
            }
