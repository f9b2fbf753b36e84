"""
Module de création des figures d'une distillation.
Support Plotly (interactif, HTML) et Matplotlib (statique, PNG).
"""
from typing import List, Optional, Sequence, Union
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
from plotly.subplots import make_subplots
import matplotlib
import matplotlib.pyplot as plt
import seaborn as sns
import torch

from config import settings
from utils.logger import get_logger


logger = get_logger(__name__)

# Configuration Matplotlib pour éviter les warnings
matplotlib.use('Agg')

LOSS_TERMS = ("kd", "synth", "self_sup", "total")


class ChartBuilder:
    """
    Classe pour créer les figures d'une exécution.

    Figures disponibles:
    - Trajectoire de précision par round
    - Courbes de pertes par terme
    - Fraction retenue en fonction de ω
    - Histogramme des similarités cosinus
    - Courbes de balayage (précision et similarité moyenne)
    - Grille d'augmentation (sources, variantes retenues et filtrées)

    Example:
        >>> builder = ChartBuilder()
        >>> fig = builder.accuracy_trajectory([0.41, 0.77, 0.88])
        >>> builder.save_chart(fig, 'plots/accuracy.png')
    """

    def __init__(
        self,
        theme: Optional[str] = None,
        width: Optional[int] = None,
        height: Optional[int] = None
    ):
        """
        Initialise le chart builder.

        Args:
            theme: Thème Plotly
            width: Largeur par défaut (pixels)
            height: Hauteur par défaut (pixels)
        """
        self.theme = theme or settings.CHART_THEME
        self.width = width or settings.CHART_WIDTH
        self.height = height or settings.CHART_HEIGHT

        sns.set_style("whitegrid")
        sns.set_palette("husl")

        logger.info(
            f"ChartBuilder initialisé - theme={self.theme}, "
            f"size=({self.width}x{self.height})"
        )

    def _figsize(self, rows: int = 1) -> tuple[float, float]:
        return self.width / 100, rows * self.height / 100

    def _line(
        self,
        df: pd.DataFrame,
        x: str,
        y: Union[str, List[str]],
        title: str,
        y_label: str,
        use_plotly: bool,
        reference: Optional[float] = None,
    ) -> Union[go.Figure, plt.Figure]:
        columns = [y] if isinstance(y, str) else list(y)
        if use_plotly:
            fig = px.line(df, x=x, y=columns, title=title, markers=True, template=self.theme)
            if reference is not None:
                fig.add_hline(y=reference, line_dash="dash", annotation_text="enseignant")
            fig.update_layout(width=self.width, height=self.height, yaxis_title=y_label)
            return fig

        fig, ax = plt.subplots(figsize=self._figsize())
        for column in columns:
            ax.plot(df[x], df[column], marker='o', label=column)
        if reference is not None:
            ax.axhline(reference, linestyle='--', color='grey', label='enseignant')
        if len(columns) > 1 or reference is not None:
            ax.legend()
        ax.set_xlabel(x)
        ax.set_ylabel(y_label)
        ax.set_title(title)
        plt.tight_layout()
        return fig

    def accuracy_trajectory(
        self,
        accuracies: Sequence[float],
        teacher_accuracy: Optional[float] = None,
        title: str = "Précision de l'élève par round",
        use_plotly: bool = False
    ) -> Union[go.Figure, plt.Figure]:
        """
        Précision de l'élève après chaque round.

        Args:
            accuracies: Précision par round
            teacher_accuracy: Ligne de référence optionnelle
        """
        logger.info(f"Création trajectoire de précision: {len(accuracies)} rounds")
        df = pd.DataFrame({"round": np.arange(len(accuracies)), "accuracy": list(accuracies)})
        return self._line(df, "round", "accuracy", title, "précision", use_plotly,
                          reference=teacher_accuracy)

    def loss_curves(
        self,
        history: Sequence[dict],
        title: str = "Pertes de distillation",
        use_plotly: bool = False
    ) -> Union[go.Figure, plt.Figure]:
        """Une courbe par terme de perte (kd, synth, self_sup, total) en fonction du pas."""
        df = pd.DataFrame(list(history))
        if df.empty:
            df = pd.DataFrame(columns=["step", *LOSS_TERMS])
        terms = [term for term in LOSS_TERMS if term in df.columns]
        logger.info(f"Création courbes de pertes: {len(df)} pas, termes={terms}")
        return self._line(df, "step", terms, title, "perte", use_plotly)

    def retained_curve(
        self,
        retained: pd.DataFrame,
        omega: Optional[float] = None,
        title: str = "Fraction retenue en fonction de ω",
        use_plotly: bool = False
    ) -> Union[go.Figure, plt.Figure]:
        """
        Fraction de variantes retenues par le filtre (s > ω).

        Args:
            retained: DataFrame ``omega`` / ``retained_fraction``
            omega: Seuil de l'exécution, marqué d'une ligne verticale
        """
        fig = self._line(retained, "omega", "retained_fraction", title,
                         "fraction retenue", use_plotly)
        if omega is not None:
            if use_plotly:
                fig.add_vline(x=omega, line_dash="dot")
            else:
                fig.axes[0].axvline(omega, linestyle=':', color='black')
        return fig

    def similarity_histogram(
        self,
        values: Sequence[float],
        omega: Optional[float] = None,
        bins: int = 40,
        title: str = "Distribution des similarités cosinus",
        use_plotly: bool = False
    ) -> Union[go.Figure, plt.Figure]:
        """Histogramme des similarités source/variante, seuil ω en pointillés."""
        df = pd.DataFrame({"similarity": list(values)})
        logger.info(f"Création histogramme des similarités: {len(df)} valeurs")

        if use_plotly:
            fig = px.histogram(df, x="similarity", nbins=bins, title=title, template=self.theme)
            if omega is not None:
                fig.add_vline(x=omega, line_dash="dot")
            fig.update_layout(width=self.width, height=self.height)
            return fig

        fig, ax = plt.subplots(figsize=self._figsize())
        sns.histplot(df, x="similarity", bins=bins, ax=ax)
        if omega is not None:
            ax.axvline(omega, linestyle=':', color='black', label=f"ω = {omega}")
            ax.legend()
        ax.set_xlim(-1.0, 1.0)
        ax.set_title(title)
        plt.tight_layout()
        return fig

    def sweep_curves(
        self,
        table: pd.DataFrame,
        parameter: str,
        use_plotly: bool = False
    ) -> Union[go.Figure, plt.Figure]:
        """
        Précision finale et similarité moyenne en fonction de la valeur balayée.

        Args:
            table: Résultats du balayage (colonnes value, accuracy, mean_similarity)
            parameter: Nom du paramètre balayé
        """
        logger.info(f"Création courbes de balayage: {parameter} ({len(table)} valeurs)")
        x = table["value"].astype(str)

        if use_plotly:
            fig = make_subplots(rows=1, cols=2, subplot_titles=["précision", "similarité moyenne"])
            fig.add_trace(go.Scatter(x=x, y=table["accuracy"], mode="lines+markers"), row=1, col=1)
            fig.add_trace(go.Scatter(x=x, y=table["mean_similarity"], mode="lines+markers"),
                          row=1, col=2)
            fig.update_layout(title_text=f"Balayage de {parameter}", showlegend=False,
                              template=self.theme, width=self.width, height=self.height)
            return fig

        fig, (left, right) = plt.subplots(1, 2, figsize=self._figsize())
        left.plot(x, table["accuracy"], marker='o')
        left.set_ylabel("précision")
        right.plot(x, table["mean_similarity"], marker='o', color='tab:orange')
        right.set_ylabel("similarité moyenne")
        for ax in (left, right):
            ax.set_xlabel(parameter)
        fig.suptitle(f"Balayage de {parameter}")
        plt.tight_layout()
        return fig

    def augmentation_grid(
        self,
        rows: Sequence[tuple[torch.Tensor, Sequence[torch.Tensor], Sequence[torch.Tensor]]],
        title: str = "Sources, variantes retenues et filtrées"
    ) -> plt.Figure:
        """
        Grille d'images : une ligne par source, puis ses variantes retenues
        (cadre vert) et filtrées (cadre rouge).

        Args:
            rows: [(source C×H×W, [retenues], [filtrées]), ...]
        """
        columns = 1 + max((len(kept) + len(dropped) for _, kept, dropped in rows), default=0)
        height = max(len(rows), 1)
        fig, axes = plt.subplots(height, columns, figsize=(1.2 * columns, 1.2 * height),
                                 squeeze=False)
        for ax in axes.flat:
            ax.axis('off')

        def show(ax, image: torch.Tensor, color: Optional[str]):
            array = image.detach().cpu().clamp(0, 1).permute(1, 2, 0).numpy()
            if array.shape[2] == 1:
                ax.imshow(array[:, :, 0], cmap='gray', vmin=0, vmax=1)
            else:
                ax.imshow(array)
            if color is not None:
                ax.axis('on')
                ax.set_xticks([])
                ax.set_yticks([])
                for spine in ax.spines.values():
                    spine.set_edgecolor(color)
                    spine.set_linewidth(2)

        for i, (source, kept, dropped) in enumerate(rows):
            show(axes[i][0], source, None)
            for j, image in enumerate([*kept, *dropped]):
                show(axes[i][j + 1], image, 'green' if j < len(kept) else 'red')
        fig.suptitle(title)
        plt.tight_layout()
        logger.info(f"Grille d'augmentation: {len(rows)} sources")
        return fig

    def save_chart(
        self,
        fig: Union[go.Figure, plt.Figure],
        filepath: Union[str, Path],
        format: str = 'auto'
    ) -> Path:
        """
        Sauvegarde un graphique (HTML pour Plotly, PNG/PDF/SVG pour Matplotlib).

        Example:
            >>> builder.save_chart(fig, 'plots/accuracy.png')
        """
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)

        if format == 'auto':
            format = filepath.suffix.lstrip('.')

        logger.info(f"Sauvegarde graphique: {filepath} (format={format})")

        if isinstance(fig, go.Figure):
            fig.write_html(str(filepath))
        else:
            fig.savefig(str(filepath), format=format, dpi=settings.CHART_DPI, bbox_inches='tight')
            plt.close(fig)

        return filepath
