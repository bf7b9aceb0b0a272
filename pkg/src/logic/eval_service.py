# -*- coding: utf-8 -*-
"""
Servicio de Evaluación.

Curvas de lift (acumulado de aciertos del valor objetivo vs. fracción de
población ordenada por probabilidad predicha), leyenda de minería
(población correcta, probabilidad de predicción) y selección del modelo por
el producto de ambas.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from config.config import AGREGACION_PROBABILIDAD  # noqa: E402
from src.utils.exceptions import EvaluacionError  # noqa: E402
from src.utils.logger import configurar_logger  # noqa: E402

logger = configurar_logger(__name__)

Prediccion = tuple[str, float]
VALOR_CORRECTO = "correct"


@dataclass(frozen=True)
class LiftCurve:
    modelo: tuple[tuple[float, float], ...]
    ideal: tuple[tuple[float, float], ...]
    valor_objetivo: str
    prevalencia: float

    def a_csv(self) -> str:
        tabla = pd.DataFrame({
            "population_fraction": [x for x, _ in self.modelo],
            "captured_fraction": [y for _, y in self.modelo],
            "ideal_fraction": [y for _, y in self.ideal],
        })
        return tabla.to_csv(index=False, lineterminator="\n")


@dataclass(frozen=True)
class MiningLegend:
    population_correct: float
    mean_predict_probability: float
    score: float

    def __post_init__(self):
        for nombre in ("population_correct", "mean_predict_probability", "score"):
            valor = getattr(self, nombre)
            if not 0.0 <= valor <= 1.0:
                raise EvaluacionError(f"Leyenda inválida: {nombre} = {valor} fuera de [0, 1].")

    @classmethod
    def desde_valores(cls, population_correct: float, mean_predict_probability: float) -> "MiningLegend":
        return cls(population_correct, mean_predict_probability, population_correct * mean_predict_probability)


@dataclass(frozen=True)
class SeleccionModelo:
    nombre_a: str
    nombre_b: str
    leyenda_a: MiningLegend
    leyenda_b: MiningLegend
    seleccionado: str
    empate: bool
    margen: float

    def a_dict(self) -> dict:
        return {
            "model_a": self.nombre_a,
            "model_b": self.nombre_b,
            "score_a": self.leyenda_a.score,
            "score_b": self.leyenda_b.score,
            "selected": self.seleccionado,
            "tie": self.empate,
            "margin": self.margen,
        }


def _validar(predictions: Sequence[Prediccion], truths: Sequence[str]):
    if len(predictions) != len(truths):
        raise EvaluacionError(f"Longitudes distintas: {len(predictions)} predicciones y {len(truths)} verdades.")
    for _, p in predictions:
        if not 0.0 <= p <= 1.0:
            raise EvaluacionError(f"Probabilidad fuera de [0, 1]: {p}")


def lift_curve(predictions: Sequence[Prediccion], truths: Sequence[str], target_value: str) -> LiftCurve:
    """
    Ordena por probabilidad predicha descendente (empates por índice original)
    y acumula la fracción de verdades iguales a target_value capturadas.
    """
    _validar(predictions, truths)
    verdades = np.array([str(t) == str(target_value) for t in truths])
    H = int(verdades.sum())
    if H == 0:
        raise EvaluacionError(f"Ningún registro tiene el valor objetivo '{target_value}': la curva no está definida.")
    N = len(truths)
    probabilidades = np.array([p for _, p in predictions], dtype=float)
    orden = np.argsort(-probabilidades, kind="stable")
    capturados = np.concatenate([[0], np.cumsum(verdades[orden])])

    modelo = tuple((i / N, int(capturados[i]) / H) for i in range(N + 1))
    ideal = tuple((i / N, min(i, H) / H) for i in range(N + 1))
    return LiftCurve(modelo, ideal, str(target_value), H / N)


def lift_curve_global(predictions: Sequence[Prediccion], truths: Sequence[str]) -> LiftCurve:
    """Curva de lift sobre el evento "predicción correcta"."""
    _validar(predictions, truths)
    aciertos = [VALOR_CORRECTO if str(p) == str(t) else "" for (p, _), t in zip(predictions, truths)]
    return lift_curve(predictions, aciertos, VALOR_CORRECTO)


def probabilidad_de_valor(prediccion: Prediccion, valor: str, n_clases: int) -> float:
    """Probabilidad asignada a 'valor': la predicha si coincide, si no el resto repartido entre las demás clases."""
    clase, p = prediccion
    if str(clase) == str(valor):
        return p
    return (1.0 - p) / max(n_clases - 1, 1)


def mining_legend(
    predictions: Sequence[Prediccion], truths: Sequence[str], agregacion: str = AGREGACION_PROBABILIDAD
) -> MiningLegend:
    if not predictions:
        raise EvaluacionError("La leyenda de minería requiere al menos una predicción.")
    _validar(predictions, truths)
    correctos = np.array([str(p) == str(t) for (p, _), t in zip(predictions, truths)])
    probabilidades = np.array([p for _, p in predictions], dtype=float)
    if agregacion == "media_todas":
        media = float(probabilidades.mean())
    elif agregacion == "media_correctas":
        media = float(probabilidades[correctos].mean()) if correctos.any() else 0.0
    else:
        raise EvaluacionError(f"Agregación de probabilidad desconocida: '{agregacion}'")
    return MiningLegend.desde_valores(float(correctos.mean()), media)


def compare_models(
    a: MiningLegend, b: MiningLegend, nombre_a: str = "association_rules", nombre_b: str = "decision_tree"
) -> SeleccionModelo:
    """Selecciona la leyenda con mayor puntaje; en empate exacto, 'a' con la marca de empate."""
    empate = a.score == b.score
    seleccionado = nombre_a if a.score >= b.score else nombre_b
    seleccion = SeleccionModelo(nombre_a, nombre_b, a, b, seleccionado, empate, abs(a.score - b.score))
    logger.info(
        f"Selección: {nombre_a} {a.score:.4f} vs {nombre_b} {b.score:.4f} -> {seleccionado}"
        + (" (empate)" if empate else "")
    )
    return seleccion


def texto_leyendas(leyendas: dict[str, MiningLegend]) -> str:
    """Tabla de texto al estilo "Mining Legend"."""
    lineas = [f"{'Modelo':<28}{'Población correcta':>20}{'Prob. predicción':>18}{'Puntaje':>10}"]
    for nombre, ley in leyendas.items():
        lineas.append(
            f"{nombre:<28}{ley.population_correct:>20.4f}{ley.mean_predict_probability:>18.4f}{ley.score:>10.4f}"
        )
    return "\n".join(lineas) + "\n"


def graficar_lift(curvas: dict[str, LiftCurve], ruta: Path | str, titulo: str = "Lift") -> Path:
    """SVG determinista con la curva de cada modelo, la curva ideal y la diagonal."""
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "minado-admisiones", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 5))
        ideal_dibujada = False
        for nombre, curva in curvas.items():
            x, y = zip(*curva.modelo)
            ax.plot(x, y, color="red" if not ideal_dibujada else None, label=nombre)
            if not ideal_dibujada:
                xi, yi = zip(*curva.ideal)
                ax.plot(xi, yi, color="blue", label="ideal")
                ideal_dibujada = True
        ax.plot([0, 1], [0, 1], linestyle="--", color="gray", label="aleatorio")
        ax.set_xlabel("Fracción de población")
        ax.set_ylabel("Fracción capturada")
        ax.set_title(titulo)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower right")
        fig.savefig(ruta, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.debug(f"Gráfico de lift guardado en '{ruta}'")
    return ruta
