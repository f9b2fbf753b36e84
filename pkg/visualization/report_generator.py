"""
Module de génération des rapports d'exécution (texte, HTML, JSON)
et des tables de résultats de balayage (CSV, Markdown).
"""
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional
import math

import pandas as pd
from jinja2 import Environment

from config import settings
from utils.cache import atomic_write_json, atomic_write_text
from utils.logger import get_logger, PerformanceLogger

logger = get_logger(__name__)


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4f}"
    return str(value)


def markdown_table(df: pd.DataFrame) -> str:
    """Table Markdown d'un DataFrame (valeurs formatées comme dans les rapports)."""
    columns = [str(c) for c in df.columns]
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "|".join("---" for _ in columns) + "|",
    ]
    for row in df.itertuples(index=False):
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


class ReportGenerator:
    TEXT_TEMPLATE = """\
{{ title }}
{{ "=" * title|length }}
Commande : {{ command }}
Généré le {{ date }} ({{ app_name }} {{ version }})
Statut   : {{ "SUCCÈS" if not failed_stage else "ÉCHEC à l'étape " ~ failed_stage }}
{% if error %}Erreur   : {{ error }}
{% endif %}
Résumé
------
{% for key, value in summary.items() %}{{ "%-22s"|format(key) }} {{ value|fmt }}
{% endfor %}
{% if rounds %}
Rounds
------
{{ "%-6s %-10s %-10s %-10s %-10s %-8s"|format("round", "objectif", "retenues", "sim_moy", "précision", "pool") }}
{% for r in rounds %}{{ "%-6s %-10s %-10s %-10s %-10s %-8s"|format(r.round, r.synthesis.objective|fmt, r.retained_fraction|fmt, r.mean_similarity|fmt, r.accuracy|fmt, r.pool_size) }}
{% endfor %}{% endif %}
{% if fid %}
FID par profondeur
------------------
{% for depth, value in fid.items() %}{{ "%-14s"|format(depth) }} {{ value|fmt }}
{% endfor %}{% endif %}
Configuration effective
-----------------------
{{ config_text }}
"""

    HTML_TEMPLATE = """
<!DOCTYPE html>
<html lang="fr">
<head>
    <meta charset="UTF-8" />
    <title>{{ title }}</title>
    <style>
        body { font-family: "DejaVu Sans", sans-serif; color: #333; background: #f5f5f5; padding: 20px; }
        .container { max-width: 1100px; margin: 0 auto; background: white; padding: 40px;
                     box-shadow: 0 2px 10px rgba(0,0,0,0.1); }
        h1 { color: #2c3e50; border-bottom: 3px solid #2c3e50; padding-bottom: 10px; }
        h2 { color: #34495e; border-left: 4px solid #3498db; padding-left: 15px; margin-top: 30px; }
        .metadata { color: #7f8c8d; font-size: 0.9em; }
        .kpi-grid { display: grid; grid-template-columns: repeat(auto-fit, minmax(220px, 1fr)); gap: 16px; }
        .kpi-card { background: linear-gradient(135deg, #667eea 0%, #764ba2 100%); color: white;
                    padding: 16px; border-radius: 10px; }
        .kpi-label { font-size: 0.9em; opacity: 0.9; }
        .kpi-value { font-size: 1.6em; font-weight: bold; }
        table { width: 100%; border-collapse: collapse; margin: 20px 0; }
        th { background: #34495e; color: white; padding: 10px; text-align: left; }
        td { padding: 10px; border-bottom: 1px solid #ecf0f1; }
        .warning { background: #fff3cd; border-left: 4px solid #ffc107; padding: 15px; margin: 20px 0; }
        pre { background: #f8f9fa; padding: 15px; }
    </style>
</head>
<body>
    <div class="container">
        <h1>{{ title }}</h1>
        <div class="metadata"><p>{{ command }} | généré le {{ date }}</p></div>
        {% if failed_stage %}
        <div class="warning">Échec à l'étape <b>{{ failed_stage }}</b> : {{ error }}</div>
        {% endif %}

        <h2>Résumé</h2>
        <div class="kpi-grid">
            {% for key, value in summary.items() %}
            <div class="kpi-card">
                <div class="kpi-label">{{ key }}</div>
                <div class="kpi-value">{{ value|fmt }}</div>
            </div>
            {% endfor %}
        </div>

        {% if rounds %}
        <h2>Rounds</h2>
        <table>
            <tr><th>round</th><th>objectif</th><th>retenues</th><th>sim. moyenne</th><th>précision</th><th>pool</th></tr>
            {% for r in rounds %}
            <tr><td>{{ r.round }}</td><td>{{ r.synthesis.objective|fmt }}</td><td>{{ r.retained_fraction|fmt }}</td>
                <td>{{ r.mean_similarity|fmt }}</td><td>{{ r.accuracy|fmt }}</td><td>{{ r.pool_size }}</td></tr>
            {% endfor %}
        </table>
        {% endif %}

        {% if fid %}
        <h2>FID par profondeur</h2>
        <table>
            <tr>{% for depth in fid %}<th>{{ depth }}</th>{% endfor %}</tr>
            <tr>{% for value in fid.values() %}<td>{{ value|fmt }}</td>{% endfor %}</tr>
        </table>
        {% endif %}

        <h2>Configuration effective</h2>
        <pre>{{ config_text }}</pre>
    </div>
</body>
</html>
    """

    def __init__(self):
        self.environment = Environment(autoescape=False, keep_trailing_newline=True)
        self.environment.filters["fmt"] = _fmt
        logger.info("ReportGenerator initialisé")

    def _render(self, template: str, **kwargs) -> str:
        return self.environment.from_string(template).render(**kwargs)

    def generate_run_report(
        self,
        output_dir: Path,
        command: str,
        payload: Dict[str, Any],
        config_text: str = "",
        title: Optional[str] = None,
    ) -> Dict[str, Path]:
        """
        Écrit ``report.txt``, ``report.html`` et ``report.json``.

        Args:
            output_dir: Répertoire d'exécution
            command: Commande exécutée (distill, train-teacher, ...)
            payload: Contenu sérialisable ; les clés ``rounds``, ``fid``,
                ``failed_stage`` et ``error`` sont mises en forme, les autres
                scalaires forment le résumé
            config_text: Configuration effective normalisée

        Returns:
            Dict: {"txt", "html", "json"} -> chemins
        """
        output_dir = Path(output_dir)
        with PerformanceLogger(logger, f"generate_run_report({command})"):
            summary = {
                key: value for key, value in payload.items()
                if key not in ("failed_stage", "error")
                and (value is None or isinstance(value, (int, float, str, bool)))
            }
            context = {
                "title": title or f"Rapport d'exécution - {command}",
                "command": command,
                "date": datetime.now().strftime("%d/%m/%Y %H:%M"),
                "app_name": settings.APP_NAME,
                "version": settings.APP_VERSION,
                "summary": summary,
                "rounds": payload.get("rounds") or [],
                "fid": payload.get("fid") or {},
                "failed_stage": payload.get("failed_stage"),
                "error": payload.get("error"),
                "config_text": config_text,
            }
            paths = {
                "txt": output_dir / "report.txt",
                "html": output_dir / "report.html",
                "json": output_dir / "report.json",
            }
            atomic_write_text(paths["txt"], self._render(self.TEXT_TEMPLATE, **context))
            atomic_write_text(paths["html"], self._render(self.HTML_TEMPLATE, **context))
            atomic_write_json(paths["json"], {"command": command, **payload})

        logger.info(f"Rapport généré: {paths['txt']}")
        return paths

    def write_table(self, df: pd.DataFrame, output_dir: Path, stem: str = "results") -> Dict[str, Path]:
        """
        Exporte une table de résultats en CSV et Markdown.

        Returns:
            Dict: {"csv", "md"} -> chemins
        """
        output_dir = Path(output_dir)
        paths = {"csv": output_dir / f"{stem}.csv", "md": output_dir / f"{stem}.md"}
        atomic_write_text(paths["csv"], df.to_csv(index=False))
        atomic_write_text(paths["md"], markdown_table(df))
        logger.info(f"Table exportée: {paths['csv']} ({len(df)} lignes)")
        return paths
