"""
Module visualization - Figures et rapports d'exécution.

Classes principales:
    - ChartBuilder: Trajectoires, pertes, similarités, balayages, grilles d'images
    - ReportGenerator: report.txt / report.html / report.json et tables de résultats

Usage:
    >>> from visualization import ChartBuilder, ReportGenerator
    >>> fig = ChartBuilder().accuracy_trajectory([0.5, 0.8])
"""

from visualization.chart_builder import ChartBuilder
from visualization.report_generator import ReportGenerator, markdown_table

__all__ = ["ChartBuilder", "ReportGenerator", "markdown_table"]
