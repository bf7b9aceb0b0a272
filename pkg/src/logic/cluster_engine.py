# -*- coding: utf-8 -*-
"""
Motor de Clustering.

- K-means (Lloyd) con inicialización determinista por barrido del punto más lejano.
- Aglomeración jerárquica con distancia de log-verosimilitud para atributos
  mixtos (continuos con distribución normal, categóricos multinomiales).
- Selección automática de K en dos etapas (cambio de BIC y cociente de
  distancias de fusión) y su composición TwoStep.

Todo el cálculo usa logaritmo natural.
"""

import io
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config.config import (
    ATRIBUTOS_CLUSTER,
    FACTOR_GANANCIA_NULA,
    KMEANS_MAX_ITER,
    KMEANS_TOL,
    MAX_MICRO_CLUSTERS,
    SEMILLA_DEFECTO,
    UMBRAL_MICRO_CLUSTERS,
    UMBRAL_R1_BIC,
    UMBRAL_R2_DISTANCIA,
)
from src.datos.esquema import COLUMNA_ID, Dataset
from src.utils.exceptions import ClusteringError, VarianzaNulaError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)

# Ganancia por fila al partir en dos mitades una normal estandarizada:
# ½·ln(2 / (2 - 2/π)); referencia de "sin estructura" para atributos continuos.
GANANCIA_NULA_CONTINUA = 0.5 * np.log(1.0 / (1.0 - 1.0 / np.pi))


# --- Codificación de atributos ---

@dataclass(frozen=True, eq=False)
class CodificadorAtributos:
    """Estandariza continuos (media 0, varianza 1) y codifica categóricos (uno-de-L)."""

    continuos: tuple[str, ...]
    categoricos: tuple[str, ...]
    medias: np.ndarray
    desvios: np.ndarray
    niveles: tuple[tuple[str, ...], ...]

    @classmethod
    def ajustar(cls, ds: Dataset, atributos) -> "CodificadorAtributos":
        faltantes = [a for a in atributos if a not in ds.nombres]
        if faltantes:
            raise ClusteringError(f"Atributos de clustering inexistentes en el esquema: {faltantes}")
        continuos = tuple(a for a in atributos if ds.tipo_de(a) == "continuo")
        categoricos = tuple(a for a in atributos if ds.tipo_de(a) == "categorico")
        crudos = ds.filas[list(continuos)].to_numpy(dtype=float) if continuos else np.zeros((ds.n, 0))
        if ds.n:
            medias, desvios = crudos.mean(axis=0), crudos.std(axis=0)
        else:
            medias, desvios = np.zeros(len(continuos)), np.ones(len(continuos))
        niveles = tuple(tuple(sorted(ds.filas[c].astype(str).unique())) for c in categoricos)
        return cls(continuos, categoricos, medias, desvios, niveles)

    def continuos_crudos(self, ds: Dataset) -> np.ndarray:
        if not self.continuos:
            return np.zeros((ds.n, 0))
        return ds.filas[list(self.continuos)].to_numpy(dtype=float)

    def estandarizados(self, ds: Dataset) -> np.ndarray:
        desvios = np.where(self.desvios > 0, self.desvios, 1.0)
        return (self.continuos_crudos(ds) - self.medias) / desvios

    def codigos(self, ds: Dataset) -> np.ndarray:
        """Código de nivel por atributo categórico; -1 para niveles no vistos al ajustar."""
        codigos = np.full((ds.n, len(self.categoricos)), -1, dtype=np.int64)
        for j, (nombre, niveles) in enumerate(zip(self.categoricos, self.niveles)):
            indice = {nivel: i for i, nivel in enumerate(niveles)}
            codigos[:, j] = [indice.get(v, -1) for v in ds.filas[nombre].astype(str)]
        return codigos

    def matriz(self, ds: Dataset) -> np.ndarray:
        """Matriz numérica para K-means: continuos estandarizados + indicadores 0/1."""
        bloques = [self.estandarizados(ds)]
        codigos = self.codigos(ds)
        for j, niveles in enumerate(self.niveles):
            uno = np.zeros((ds.n, len(niveles)))
            validos = codigos[:, j] >= 0
            uno[np.flatnonzero(validos), codigos[validos, j]] = 1.0
            bloques.append(uno)
        return np.hstack(bloques) if bloques else np.zeros((ds.n, 0))


# --- Estadísticas suficientes por cluster ---

@dataclass(frozen=True, eq=False)
class EstadisticasCluster:
    """Tamaño N_v, sumas y sumas de cuadrados por continuo, y conteos N_vjl por categórico."""

    n: int
    suma: np.ndarray
    suma_cuad: np.ndarray
    conteos: tuple[np.ndarray, ...] = ()

    @classmethod
    def desde_filas(cls, continuos: np.ndarray, codigos: np.ndarray, niveles: list[int]) -> "EstadisticasCluster":
        continuos = np.atleast_2d(np.asarray(continuos, dtype=float))
        codigos = np.atleast_2d(np.asarray(codigos, dtype=np.int64))
        n = continuos.shape[0] if continuos.shape[1] else codigos.shape[0]
        conteos = tuple(
            np.bincount(codigos[:, j][codigos[:, j] >= 0], minlength=L).astype(np.int64)
            for j, L in enumerate(niveles)
        )
        return cls(int(n), continuos.sum(axis=0), (continuos ** 2).sum(axis=0), conteos)

    def __add__(self, otro: "EstadisticasCluster") -> "EstadisticasCluster":
        return EstadisticasCluster(
            self.n + otro.n,
            self.suma + otro.suma,
            self.suma_cuad + otro.suma_cuad,
            tuple(a + b for a, b in zip(self.conteos, otro.conteos)),
        )

    @property
    def media(self) -> np.ndarray:
        return self.suma / self.n

    @property
    def varianza(self) -> np.ndarray:
        return np.clip(self.suma_cuad / self.n - self.media ** 2, 0.0, None)

    def coincide(self, otra: "EstadisticasCluster") -> bool:
        return (
            self.n == otra.n
            and np.allclose(self.suma, otra.suma)
            and np.allclose(self.suma_cuad, otra.suma_cuad)
            and all(np.array_equal(a, b) for a, b in zip(self.conteos, otra.conteos))
        )


def _xi_vector(N, S, Q, C, n_categoricos: int, var_global: np.ndarray) -> np.ndarray:
    """
    ξ_v = -N_v (Σ_k ½·ln(σ̂_k² + σ̂_vk²) + Σ_j Ê_vj), vectorizado sobre filas de clusters.
    N_v·Ê_vj se calcula como N ln N - Σ_l c ln c para evitar divisiones.
    """
    N = np.asarray(N, dtype=float)
    xi = np.zeros_like(N)
    ok = N > 0
    if not ok.any():
        return xi
    Nv = N[ok]
    if S.shape[1]:
        media = S[ok] / Nv[:, None]
        var = np.clip(Q[ok] / Nv[:, None] - media ** 2, 0.0, None)
        xi[ok] -= Nv * (0.5 * np.log(var_global + var)).sum(axis=1)
    if n_categoricos:
        Cv = C[ok].astype(float)
        c_ln_c = np.where(Cv > 0, Cv * np.log(np.where(Cv > 0, Cv, 1.0)), 0.0).sum(axis=1)
        xi[ok] -= n_categoricos * Nv * np.log(Nv) - c_ln_c
    return xi


def _xi(stats: EstadisticasCluster, var_global: np.ndarray) -> float:
    C = np.concatenate(stats.conteos)[None, :] if stats.conteos else np.zeros((1, 0))
    return float(_xi_vector(
        np.array([stats.n]), stats.suma[None, :], stats.suma_cuad[None, :], C,
        len(stats.conteos), var_global,
    )[0])


def _validar_varianzas(varianzas) -> np.ndarray:
    varianzas = np.asarray(varianzas, dtype=float)
    if np.any(varianzas <= 0):
        raise VarianzaNulaError(
            "Varianza global cero en un atributo continuo: elimine el atributo constante antes de agrupar."
        )
    return varianzas


def loglik_distance(stats_i: EstadisticasCluster, stats_j: EstadisticasCluster, global_variances) -> float:
    """d(i, j) = ξ_i + ξ_j - ξ_<i,j>: pérdida de log-verosimilitud al fusionar dos clusters."""
    if stats_i.n <= 0 or stats_j.n <= 0:
        raise ClusteringError("La distancia de log-verosimilitud requiere clusters no vacíos.")
    var_global = _validar_varianzas(global_variances)
    d = _xi(stats_i, var_global) + _xi(stats_j, var_global) - _xi(stats_i + stats_j, var_global)
    return max(d, 0.0)


# --- Resultados ---

@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    ids: tuple[str, ...]
    asignacion: np.ndarray
    atributos: tuple[str, ...] = ()
    estadisticas: tuple[EstadisticasCluster, ...] = ()
    centros: np.ndarray | None = None
    codificador: CodificadorAtributos | None = None
    objetivo: float | None = None
    historial_objetivo: tuple[float, ...] = ()
    reubicaciones: int = 0
    metodo: str = ""

    def __post_init__(self):
        if len(self.ids) != len(self.asignacion):
            raise ClusteringError("Cada fila debe tener exactamente una asignación.")
        if len(self.asignacion) and (self.asignacion.min() < 0 or self.asignacion.max() >= self.k):
            raise ClusteringError(f"Asignaciones fuera de [0, {self.k}).")

    @property
    def n(self) -> int:
        return len(self.ids)

    def tamanos(self) -> np.ndarray:
        return np.bincount(self.asignacion, minlength=self.k)

    @classmethod
    def desde_etiquetas(cls, ids, etiquetas, k: int | None = None, metodo: str = "etiquetas") -> "Clustering":
        etiquetas = np.asarray(etiquetas, dtype=np.int64)
        k = int(etiquetas.max()) + 1 if k is None and len(etiquetas) else (k or 1)
        return cls(k, tuple(str(i) for i in ids), etiquetas, metodo=metodo)

    def verificar(self, ds: Dataset) -> None:
        """Recalcula las estadísticas desde la asignación y las compara."""
        if not self.estadisticas:
            return
        recalculadas = estadisticas_desde_dataset(ds, self.asignacion, self.k, self.atributos)
        if int(self.tamanos().sum()) != ds.n:
            raise ClusteringError("Los tamaños de cluster no suman el número de filas.")
        for v, (a, b) in enumerate(zip(self.estadisticas, recalculadas)):
            if not a.coincide(b):
                raise ClusteringError(f"Estadísticas del cluster {v} inconsistentes con la asignación.")

    def a_csv(self) -> str:
        return pd.DataFrame({COLUMNA_ID: self.ids, "cluster": self.asignacion}).to_csv(
            index=False, lineterminator="\n"
        )


def leer_asignaciones(texto: str, ds: Dataset, atributos=None) -> Clustering:
    """Reconstruye un Clustering desde un CSV (id, cluster) alineado con las filas de ds."""
    tabla = pd.read_csv(io.StringIO(texto), dtype={COLUMNA_ID: str, "cluster": np.int64})
    por_id = dict(zip(tabla[COLUMNA_ID], tabla["cluster"]))
    faltan = [i for i in ds.ids if i not in por_id]
    if faltan or len(por_id) != ds.n:
        raise ClusteringError(f"Las asignaciones no cubren exactamente las filas del dataset ({len(faltan)} faltan).")
    etiquetas = np.array([por_id[i] for i in ds.ids], dtype=np.int64)
    k = int(etiquetas.max()) + 1 if len(etiquetas) else 1
    atributos = tuple(atributos or [a for a in ATRIBUTOS_CLUSTER if a in ds.nombres])
    return Clustering(
        k, tuple(ds.ids), etiquetas, atributos,
        estadisticas_desde_dataset(ds, etiquetas, k, atributos), metodo="archivo",
    )


def estadisticas_desde_dataset(ds: Dataset, asignacion: np.ndarray, k: int, atributos) -> tuple:
    """Estadísticas por cluster sobre los valores crudos de los atributos indicados."""
    codificador = CodificadorAtributos.ajustar(ds, atributos)
    continuos = codificador.continuos_crudos(ds)
    codigos = codificador.codigos(ds)
    niveles = [len(n) for n in codificador.niveles]
    return tuple(
        EstadisticasCluster.desde_filas(continuos[asignacion == v], codigos[asignacion == v], niveles)
        for v in range(k)
    )


# --- K-means ---

@dataclass(frozen=True, eq=False)
class ResultadoKMeans:
    etiquetas: np.ndarray
    centros: np.ndarray
    objetivo: float
    historial: tuple[float, ...]
    reubicaciones: int
    iteraciones: int


def _asignar(X: np.ndarray, centros: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distancias = np.empty((X.shape[0], centros.shape[0]))
    for c in range(centros.shape[0]):
        distancias[:, c] = ((X - centros[c]) ** 2).sum(axis=1)
    return np.argmin(distancias, axis=1), distancias


def _centros_mas_lejanos(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Barrido del más lejano: primer centro sorteado, luego la fila más lejana de los elegidos."""
    n = X.shape[0]
    elegidos = [int(rng.integers(n))]
    dmin = ((X - X[elegidos[0]]) ** 2).sum(axis=1)
    while len(elegidos) < k:
        candidatos = dmin.copy()
        candidatos[elegidos] = -1.0
        siguiente = int(np.argmax(candidatos))
        elegidos.append(siguiente)
        dmin = np.minimum(dmin, ((X - X[siguiente]) ** 2).sum(axis=1))
    return X[elegidos].astype(float)


def _lloyd(X: np.ndarray, centros: np.ndarray, max_iter: int, tol: float) -> ResultadoKMeans:
    k = centros.shape[0]
    historial: list[float] = []
    reubicaciones = 0

    def registrar(objetivo: float):
        if historial and objetivo > historial[-1] + 1e-9 * max(1.0, abs(historial[-1])):
            raise ClusteringError(f"El objetivo de K-means aumentó ({historial[-1]} -> {objetivo}).")
        historial.append(objetivo)

    etiquetas = None
    iteracion = 0
    for iteracion in range(1, max_iter + 1):
        nuevas, distancias = _asignar(X, centros)
        registrar(float(distancias[np.arange(len(nuevas)), nuevas].sum()))
        if etiquetas is not None and np.array_equal(nuevas, etiquetas):
            break
        etiquetas = nuevas
        propias = distancias[np.arange(len(etiquetas)), etiquetas].copy()
        nuevos_centros = centros.copy()
        for c in range(k):
            miembros = etiquetas == c
            if miembros.any():
                nuevos_centros[c] = X[miembros].mean(axis=0)
            else:
                lejano = int(np.argmax(propias))
                nuevos_centros[c] = X[lejano]
                propias[lejano] = 0.0
                reubicaciones += 1
                logger.warning(f"K-means: cluster {c} vacío en la iteración {iteracion}; reubicado en la fila {lejano}.")
        movimiento = float(np.sqrt(((nuevos_centros - centros) ** 2).sum(axis=1)).max())
        centros = nuevos_centros
        if movimiento < tol:
            etiquetas, distancias = _asignar(X, centros)
            registrar(float(distancias[np.arange(len(etiquetas)), etiquetas].sum()))
            break
    else:
        etiquetas, distancias = _asignar(X, centros)
        registrar(float(distancias[np.arange(len(etiquetas)), etiquetas].sum()))

    return ResultadoKMeans(etiquetas, centros, historial[-1], tuple(historial), reubicaciones, iteracion)


def kmeans_matriz(
    X: np.ndarray,
    k: int,
    seed: int = SEMILLA_DEFECTO,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
    centros_iniciales: np.ndarray | None = None,
    n_reinicios: int = 1,
) -> ResultadoKMeans:
    """
    K-means sobre una matriz numérica. Con n_reinicios > 1 se queda con el
    menor objetivo (empates: el primer reinicio).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise ClusteringError(f"k debe ser >= 1 (recibido {k}).")
    if k > n:
        raise ClusteringError(f"k = {k} supera el número de filas ({n}).")

    if centros_iniciales is not None:
        centros = np.asarray(centros_iniciales, dtype=float).reshape(k, -1)
        return _lloyd(X, centros, max_iter, tol)

    mejor: ResultadoKMeans | None = None
    for semilla in np.random.SeedSequence(seed).spawn(n_reinicios):
        rng = np.random.Generator(np.random.PCG64(semilla))
        resultado = _lloyd(X, _centros_mas_lejanos(X, k, rng), max_iter, tol)
        if mejor is None or resultado.objetivo < mejor.objetivo:
            mejor = resultado
    return mejor


def kmeans(
    ds: Dataset,
    k: int,
    seed: int = SEMILLA_DEFECTO,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
    atributos=None,
    n_reinicios: int = 1,
) -> Clustering:
    """K-means sobre los atributos de clustering (continuos estandarizados, categóricos uno-de-L)."""
    atributos = tuple(atributos or [a for a in ATRIBUTOS_CLUSTER if a in ds.nombres])
    if k > ds.n:
        raise ClusteringError(f"k = {k} supera el número de filas ({ds.n}).")
    codificador = CodificadorAtributos.ajustar(ds, atributos)
    for nombre, desvio in zip(codificador.continuos, codificador.desvios):
        if desvio == 0:
            logger.warning(f"K-means: el atributo '{nombre}' es constante; no aporta a la distancia.")
    resultado = kmeans_matriz(codificador.matriz(ds), k, seed, max_iter, tol, n_reinicios=n_reinicios)
    logger.info(
        f"K-means k={k}: objetivo {resultado.objetivo:.6f} en {resultado.iteraciones} iteraciones "
        f"({resultado.reubicaciones} reubicaciones)."
    )
    return Clustering(
        k=k,
        ids=tuple(ds.ids),
        asignacion=resultado.etiquetas.astype(np.int64),
        atributos=atributos,
        estadisticas=estadisticas_desde_dataset(ds, resultado.etiquetas, k, atributos),
        centros=resultado.centros,
        codificador=codificador,
        objetivo=resultado.objetivo,
        historial_objetivo=resultado.historial,
        reubicaciones=resultado.reubicaciones,
        metodo="kmeans",
    )


def asignar_por_centros(clustering: Clustering, ds: Dataset) -> np.ndarray:
    """Asigna filas nuevas al centro de K-means más cercano (misma codificación del ajuste)."""
    if clustering.centros is None or clustering.codificador is None:
        raise ClusteringError("El clustering no tiene centros: solo K-means permite asignar filas nuevas.")
    etiquetas, _ = _asignar(clustering.codificador.matriz(ds), clustering.centros)
    return etiquetas


# --- Aglomeración por log-verosimilitud ---

@dataclass(frozen=True)
class PasoFusion:
    k: int  # número de clusters tras la fusión
    par: tuple[int, int]
    distancia: float
    bic: float | None


@dataclass(frozen=True, eq=False)
class MergeTrace:
    pasos: tuple[PasoFusion, ...]
    bic: dict[int, float]
    n_filas: int
    n_unidades: int
    unidad_de_fila: np.ndarray
    ganancia_nula: float
    atributos: tuple[str, ...] = ()
    estandarizados: np.ndarray | None = field(default=None, repr=False)
    codigos: np.ndarray | None = field(default=None, repr=False)
    niveles: tuple[int, ...] = ()

    def distancia_fusion(self, k: int) -> float | None:
        """Distancia de la fusión que lleva de k a k-1 clusters."""
        for paso in self.pasos:
            if paso.k == k - 1:
                return paso.distancia
        return None

    def miembros_en_nivel(self, k: int) -> np.ndarray:
        """Cluster (0..k-1, por orden de primera aparición) de cada fila con k clusters activos."""
        representante = np.arange(self.n_unidades)
        for paso in self.pasos:
            if paso.k < k:
                break
            a, b = paso.par
            representante[representante == b] = a
        por_fila = representante[self.unidad_de_fila]
        _, primera, inversa = np.unique(por_fila, return_index=True, return_inverse=True)
        orden = np.argsort(np.argsort(primera, kind="stable"), kind="stable")
        return orden[inversa].astype(np.int64)

    def a_csv(self) -> str:
        filas = [
            {"k": p.k, "merge_distance": p.distancia, "BIC": "" if p.bic is None else p.bic}
            for p in self.pasos
        ]
        return pd.DataFrame(filas, columns=["k", "merge_distance", "BIC"]).to_csv(index=False, lineterminator="\n")


def _ganancia_nula(n_continuos: int, codigos: np.ndarray, niveles) -> float:
    ganancias = [GANANCIA_NULA_CONTINUA] if n_continuos else []
    for j, L in enumerate(niveles):
        p = np.bincount(codigos[:, j], minlength=L) / max(len(codigos), 1)
        p = p[p > 0]
        ganancias.append(min(float(-(p * np.log(p)).sum()), float(np.log(2))))
    return max(ganancias) if ganancias else 0.0


def _uno_de_l(codigos: np.ndarray, niveles) -> np.ndarray:
    bloques = []
    for j, L in enumerate(niveles):
        uno = np.zeros((codigos.shape[0], L))
        uno[np.arange(codigos.shape[0]), codigos[:, j]] = 1.0
        bloques.append(uno)
    return np.hstack(bloques) if bloques else np.zeros((codigos.shape[0], 0))


def _aglomerar(
    Xz: np.ndarray, codigos: np.ndarray, niveles: tuple[int, ...], max_k: int, seed: int, atributos
) -> MergeTrace:
    n = Xz.shape[0]
    n_cont, n_cat = Xz.shape[1], len(niveles)
    var_global = _validar_varianzas(Xz.var(axis=0)) if n_cont else np.zeros(0)
    uno = _uno_de_l(codigos, niveles)

    # Unidades iniciales: filas individuales o micro-clusters de K-means
    if n > UMBRAL_MICRO_CLUSTERS:
        k_micro = min(MAX_MICRO_CLUSTERS, n // 10)
        logger.info(f"Aglomeración: {n} filas > {UMBRAL_MICRO_CLUSTERS}; pre-agrupando en {k_micro} micro-clusters.")
        unidad_de_fila = kmeans_matriz(np.hstack([Xz, uno]), k_micro, seed).etiquetas.astype(np.int64)
        _, unidad_de_fila = np.unique(unidad_de_fila, return_inverse=True)
    else:
        unidad_de_fila = np.arange(n, dtype=np.int64)
    u = int(unidad_de_fila.max()) + 1

    N = np.bincount(unidad_de_fila, minlength=u).astype(float)
    S = np.zeros((u, n_cont))
    Q = np.zeros((u, n_cont))
    C = np.zeros((u, uno.shape[1]))
    np.add.at(S, unidad_de_fila, Xz)
    np.add.at(Q, unidad_de_fila, Xz ** 2)
    np.add.at(C, unidad_de_fila, uno)
    xi = _xi_vector(N, S, Q, C, n_cat, var_global)

    activos = np.ones(u, dtype=bool)

    def fila_distancias(i: int) -> np.ndarray:
        fusion = _xi_vector(N[i] + N, S[i] + S, Q[i] + Q, C[i] + C, n_cat, var_global)
        d = np.maximum(xi[i] + xi - fusion, 0.0)
        d[~activos] = np.inf
        d[i] = np.inf
        return d

    D = np.empty((u, u))
    for i in range(u):
        D[i] = fila_distancias(i)
    minimo = D.min(axis=1)
    vecino = D.argmin(axis=1)

    m_por_cluster = 2 * n_cont + sum(L - 1 for L in niveles)
    log_n = np.log(n)
    suma_xi = float(xi.sum())
    bic: dict[int, float] = {}
    if u <= max_k + 1:
        bic[u] = -2 * suma_xi + u * m_por_cluster * log_n

    pasos: list[PasoFusion] = []
    for k_tras in range(u - 1, 0, -1):
        i = int(np.argmin(minimo))
        j = int(vecino[i])
        a, b = min(i, j), max(i, j)
        distancia = float(D[a, b])

        N[a] += N[b]
        S[a] += S[b]
        Q[a] += Q[b]
        C[a] += C[b]
        N[b] = 0.0
        activos[b] = False
        xi[a] = _xi_vector(N[a:a + 1], S[a:a + 1], Q[a:a + 1], C[a:a + 1], n_cat, var_global)[0]
        xi[b] = 0.0
        suma_xi -= distancia

        D[b, :] = np.inf
        D[:, b] = np.inf
        minimo[b] = np.inf
        fila = fila_distancias(a)
        D[a, :] = fila
        D[:, a] = fila
        minimo[a] = fila.min()
        vecino[a] = int(fila.argmin())

        afectadas = np.flatnonzero(activos & ((vecino == a) | (vecino == b)))
        for r in afectadas:
            if r == a:
                continue
            minimo[r] = D[r].min()
            vecino[r] = int(D[r].argmin())
        mejora = activos & (fila < minimo)
        mejora[a] = False
        minimo[mejora] = fila[mejora]
        vecino[mejora] = a

        valor_bic = None
        if k_tras <= max_k + 1:
            valor_bic = -2 * suma_xi + k_tras * m_por_cluster * log_n
            bic[k_tras] = valor_bic
        pasos.append(PasoFusion(k_tras, (a, b), distancia, valor_bic))

    return MergeTrace(
        pasos=tuple(pasos),
        bic=bic,
        n_filas=n,
        n_unidades=u,
        unidad_de_fila=unidad_de_fila,
        ganancia_nula=_ganancia_nula(n_cont, codigos, niveles),
        atributos=tuple(atributos),
        estandarizados=Xz,
        codigos=codigos,
        niveles=niveles,
    )


def _preparar(ds: Dataset, atributos) -> tuple[np.ndarray, np.ndarray, tuple[int, ...], tuple[str, ...]]:
    codificador = CodificadorAtributos.ajustar(ds, atributos)
    usados = (*codificador.continuos, *codificador.categoricos)
    return (
        codificador.estandarizados(ds),
        codificador.codigos(ds),
        tuple(len(n) for n in codificador.niveles),
        usados,
    )


def agglomerate(ds: Dataset, max_k: int, atributos=None, seed: int = SEMILLA_DEFECTO) -> MergeTrace:
    """
    Fusiona de forma voraz el par con menor distancia de log-verosimilitud hasta
    dejar un único cluster, registrando BIC(k) para k <= max_k + 1.
    """
    if ds.n < 2:
        raise ClusteringError("La aglomeración requiere al menos 2 filas.")
    atributos = tuple(atributos or [a for a in ATRIBUTOS_CLUSTER if a in ds.nombres])
    Xz, codigos, niveles, usados = _preparar(ds, atributos)
    logger.info(f"Aglomeración de {ds.n} filas sobre {list(usados)} (max_k={max_k}).")
    return _aglomerar(Xz, codigos, niveles, max_k, seed, usados)


def _cociente(numerador: float, denominador: float) -> float:
    if denominador > 0:
        return numerador / denominador
    return np.inf if numerador > 0 else 1.0


def auto_k(trace: MergeTrace, max_k: int) -> int:
    """
    Elige K en dos etapas:
    1. K* = menor k con R1(k) = (BIC(k) - BIC(k+1)) / (BIC(1) - BIC(2)) < umbral.
    2. Para k <= K*, R2(k) = d(k -> k-1) / d(k+1 -> k); gana el mayor R2 si supera al
       segundo por el factor configurado, si no el mayor de los dos k.
    Si la fusión final no aporta más información por fila que partir un cluster
    sin estructura, o si BIC(1) <= BIC(2), devuelve 1.
    """
    limite = min(max_k, trace.n_unidades)
    if limite <= 1 or not trace.pasos:
        return 1

    d_final = trace.distancia_fusion(2)
    if d_final is None or d_final / trace.n_filas <= FACTOR_GANANCIA_NULA * trace.ganancia_nula:
        logger.info("auto_k: la fusión final no supera la ganancia de un cluster sin estructura; K = 1.")
        return 1

    bic = trace.bic
    if 1 not in bic or 2 not in bic or bic[1] - bic[2] <= 0:
        return 1
    base = bic[1] - bic[2]

    k_estrella = limite
    for k in range(1, limite + 1):
        if k + 1 not in bic:
            break
        if (bic[k] - bic[k + 1]) / base < UMBRAL_R1_BIC:
            k_estrella = k
            break
    if k_estrella <= 1:
        return 1

    cocientes: list[tuple[float, int]] = []
    for k in range(2, k_estrella + 1):
        d_k = trace.distancia_fusion(k)
        d_siguiente = trace.distancia_fusion(k + 1)
        if d_k is None or d_siguiente is None:
            continue
        cocientes.append((_cociente(d_k, d_siguiente), k))
    if not cocientes:
        return k_estrella
    if len(cocientes) == 1:
        return cocientes[0][1]

    cocientes.sort(key=lambda par: (-par[0], -par[1]))
    (r_mejor, k_mejor), (r_segundo, k_segundo) = cocientes[0], cocientes[1]
    if np.isinf(r_mejor) and np.isinf(r_segundo):
        relacion = 1.0
    else:
        relacion = _cociente(r_mejor, r_segundo)
    elegido = k_mejor if relacion > UMBRAL_R2_DISTANCIA else max(k_mejor, k_segundo)
    logger.info(f"auto_k: K* = {k_estrella}, R2 mejor {r_mejor:.4g} (k={k_mejor}) -> K = {elegido}.")
    return elegido


def twostep(ds: Dataset, max_k: int, atributos=None, seed: int = SEMILLA_DEFECTO) -> Clustering:
    """
    TwoStep: aglomeración + auto_k y asignación final de cada fila al cluster
    más cercano según la distancia de log-verosimilitud fila-cluster.

    El K devuelto es el de auto_k salvo que la reasignación vacíe algún
    cluster: los vacíos se descartan con un aviso en el log.
    """
    atributos = tuple(atributos or [a for a in ATRIBUTOS_CLUSTER if a in ds.nombres])
    if ds.n == 0:
        raise ClusteringError("TwoStep requiere al menos una fila.")

    # Los atributos constantes no aportan y anulan la varianza global
    utiles = []
    for nombre in atributos:
        columna = ds.filas[nombre]
        if columna.astype(str).nunique() <= 1:
            logger.warning(f"TwoStep: atributo constante '{nombre}' descartado.")
        else:
            utiles.append(nombre)

    if not utiles or ds.n < 2:
        asignacion = np.zeros(ds.n, dtype=np.int64)
        return Clustering(
            1, tuple(ds.ids), asignacion, atributos,
            estadisticas_desde_dataset(ds, asignacion, 1, atributos), metodo="twostep",
        )

    trace = agglomerate(ds, max_k, utiles, seed)
    k = auto_k(trace, max_k)
    previa = trace.miembros_en_nivel(k)
    asignacion = _reasignar(trace, previa, k)

    vacios = [c for c in range(k) if not (asignacion == c).any()]
    if vacios:
        logger.warning(
            f"TwoStep: la reasignación final dejó vacíos los clusters {vacios}; "
            f"se descartan y K pasa de {k} a {k - len(vacios)}."
        )
    _, primera, inversa = np.unique(asignacion, return_index=True, return_inverse=True)
    orden = np.argsort(np.argsort(primera, kind="stable"), kind="stable")
    asignacion = orden[inversa].astype(np.int64)
    k_final = k - len(vacios)
    logger.info(f"TwoStep: K = {k_final} clusters sobre {ds.n} filas (auto_k: {k}).")
    return Clustering(
        k_final, tuple(ds.ids), asignacion, atributos,
        estadisticas_desde_dataset(ds, asignacion, k_final, atributos),
        metodo="twostep",
    )


def _reasignar(trace: MergeTrace, previa: np.ndarray, k: int) -> np.ndarray:
    """
    Cluster más cercano de cada fila: argmin_c d(fila, c) = ξ_fila + ξ_c - ξ_<c,fila>.

    Las estadísticas de cada cluster se fijan con la partición del nivel k y
    se usan tal cual para todas las filas, incluida la fila evaluada cuando ya
    pertenece a ese cluster.
    """
    Xz, codigos, niveles = trace.estandarizados, trace.codigos, trace.niveles
    n_cont, n_cat = Xz.shape[1], len(niveles)
    var_global = Xz.var(axis=0) if n_cont else np.zeros(0)
    uno = _uno_de_l(codigos, niveles)
    n = Xz.shape[0]

    xi_fila = _xi_vector(np.ones(n), Xz, Xz ** 2, uno, n_cat, var_global)
    distancias = np.empty((n, k))
    for c in range(k):
        miembros = previa == c
        Nc = float(miembros.sum())
        Sc, Qc, Cc = Xz[miembros].sum(axis=0), (Xz[miembros] ** 2).sum(axis=0), uno[miembros].sum(axis=0)
        xi_c = _xi_vector(np.array([Nc]), Sc[None, :], Qc[None, :], Cc[None, :], n_cat, var_global)[0]
        fusion = _xi_vector(Nc + np.ones(n), Sc + Xz, Qc + Xz ** 2, Cc + uno, n_cat, var_global)
        distancias[:, c] = xi_fila + xi_c - fusion
    return np.argmin(distancias, axis=1)


