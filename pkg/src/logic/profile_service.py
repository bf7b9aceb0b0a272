# -*- coding: utf-8 -*-
"""
Perfiles de clusters y etiquetado en clases.

Cada cluster no vacío se resume como proporciones por nivel (categóricos) y
media más proporciones por banda (continuos). Las clases se asignan en orden
creciente de la media del atributo clave (edad por defecto).
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.config import CLAVE_ORDEN_CLASES, PREFIJO_CLASE
from src.datos.esquema import COLUMNA_CLASE, BinningSpec, Dataset
from src.logic.cluster_engine import Clustering
from src.utils.exceptions import PerfilError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)


@dataclass(frozen=True)
class ClusterProfile:
    cluster: int
    tamano: int
    proporciones: dict[str, dict[str, float]] = field(default_factory=dict)
    medias: dict[str, float] = field(default_factory=dict)
    bandas: dict[str, dict[str, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class ClassLabel:
    nombre: str
    cluster: int


def _alinear(ds: Dataset, c: Clustering) -> np.ndarray:
    if c.ids == tuple(ds.ids):
        return c.asignacion
    if set(c.ids) != set(ds.ids) or len(c.ids) != ds.n:
        raise PerfilError("El clustering no cubre exactamente las filas del dataset.")
    por_id = dict(zip(c.ids, c.asignacion))
    return np.array([por_id[i] for i in ds.ids], dtype=np.int64)


def profile_clusters(ds: Dataset, c: Clustering, bands: BinningSpec) -> list[ClusterProfile]:
    """Un perfil por cluster no vacío; las proporciones se calculan sobre sus miembros."""
    asignacion = _alinear(ds, c)
    niveles = {nombre: sorted(ds.filas[nombre].astype(str).unique()) for nombre in ds.categoricos}
    perfiles = []
    for v in range(c.k):
        miembros = ds.filas[asignacion == v]
        if miembros.empty:
            logger.warning(f"Cluster {v} vacío: se excluye de los perfiles.")
            continue
        proporciones = {}
        for nombre in ds.categoricos:
            conteo = miembros[nombre].astype(str).value_counts()
            proporciones[nombre] = {nivel: int(conteo.get(nivel, 0)) / len(miembros) for nivel in niveles[nombre]}
        medias, bandas = {}, {}
        for nombre in ds.continuos:
            valores = miembros[nombre].to_numpy(dtype=float)
            medias[nombre] = float(valores.mean())
            if nombre in bands:
                espec = bands[nombre]
                etiquetas = [espec.etiqueta(x) for x in valores]
                if any(e is None for e in etiquetas):
                    raise PerfilError(f"Valores de '{nombre}' fuera del rango de bandas en el cluster {v}.")
                conteo = pd.Series(etiquetas).value_counts()
                bandas[nombre] = {e: int(conteo.get(e, 0)) / len(miembros) for e in espec.etiquetas}
        perfiles.append(ClusterProfile(v, len(miembros), proporciones, medias, bandas))
    return perfiles


def assign_labels(
    profiles: list[ClusterProfile],
    ds: Dataset | None = None,
    clustering: Clustering | None = None,
    clave: str = CLAVE_ORDEN_CLASES,
    prefijo: str = PREFIJO_CLASE,
) -> tuple[dict[int, ClassLabel], Dataset | None]:
    """
    Ordena los clusters por media creciente de 'clave' (empates: mayor tamaño,
    luego menor id) y los etiqueta "Class-1", "Class-2", ...
    Si se pasan ds y clustering, devuelve además el dataset con la columna 'class'.
    """
    if not profiles:
        raise PerfilError("Se necesita al menos un perfil para etiquetar.")
    if any(clave not in p.medias for p in profiles):
        raise PerfilError(f"El atributo de orden '{clave}' no es continuo en todos los perfiles.")

    orden = sorted(profiles, key=lambda p: (p.medias[clave], -p.tamano, p.cluster))
    etiquetas = {p.cluster: ClassLabel(f"{prefijo}-{i}", p.cluster) for i, p in enumerate(orden, start=1)}
    for p in orden:
        logger.info(f"Cluster {p.cluster} -> {etiquetas[p.cluster].nombre} (media {clave} {p.medias[clave]:.2f}, n={p.tamano}).")

    if ds is None or clustering is None:
        return etiquetas, None
    asignacion = _alinear(ds, clustering)
    clases = [etiquetas[int(v)].nombre for v in asignacion]
    etiquetado = ds.con_atributo(COLUMNA_CLASE, "categorico", clases, f"clases asignadas a {len(etiquetas)} clusters")
    return etiquetas, etiquetado


def perfiles_a_csv(perfiles: list[ClusterProfile], etiquetas: dict[int, ClassLabel] | None = None) -> str:
    """Formato largo: cluster, class, size, attribute, level, value."""
    filas = []
    for p in perfiles:
        clase = etiquetas[p.cluster].nombre if etiquetas else ""
        base = {"cluster": p.cluster, "class": clase, "size": p.tamano}
        for nombre, props in p.proporciones.items():
            filas += [{**base, "attribute": nombre, "level": nivel, "value": v} for nivel, v in props.items()]
        for nombre, media in p.medias.items():
            filas.append({**base, "attribute": nombre, "level": "mean", "value": media})
            filas += [{**base, "attribute": nombre, "level": b, "value": v} for b, v in p.bandas.get(nombre, {}).items()]
    columnas = ["cluster", "class", "size", "attribute", "level", "value"]
    return pd.DataFrame(filas, columns=columnas).to_csv(index=False, lineterminator="\n")


def texto_perfiles(perfiles: list[ClusterProfile], etiquetas: dict[int, ClassLabel] | None = None) -> str:
    lineas = []
    for p in perfiles:
        clase = f" [{etiquetas[p.cluster].nombre}]" if etiquetas else ""
        lineas.append(f"Cluster {p.cluster}{clase}: {p.tamano} filas")
        for nombre, media in p.medias.items():
            lineas.append(f"  {nombre}: media {media:.2f}")
            for banda, v in p.bandas.get(nombre, {}).items():
                lineas.append(f"    {banda:<12} {v:6.1%}")
        for nombre, props in p.proporciones.items():
            detalle = ", ".join(f"{nivel} {v:.1%}" for nivel, v in props.items() if v > 0)
            lineas.append(f"  {nombre}: {detalle}")
        lineas.append("")
    return "\n".join(lineas)
