# -*- coding: utf-8 -*-
"""
Servicio de Pipeline (orquestación de punta a punta).

Etapas, en orden:
    1. ingesta     - lee y preprocesa la cohorte de entrenamiento
    2. twostep     - elige K sobre los atributos de clustering
    3. kmeans      - particiona con ese K
    4. etiquetado  - perfiles y clases "Class-i"
    5. discretizar - bandas de nota y edad calculadas sobre entrenamiento
    6. modelos     - reglas de asociación y árbol por objetivo (field, class)
    7. evaluacion  - lee la cohorte de prueba, le asigna clase por el centro de
                     K-means más cercano y evalúa los cuatro modelos
    8. artefactos  - escribe tablas, gráficos, resumen y libro Excel

La cohorte de prueba no se lee antes de la etapa de evaluación; el registro de
procedencia lo verifica al final.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import pandas as pd

from config.config import (
    ARBOL_MAX_PROFUNDIDAD,
    ARBOL_MIN_GANANCIA,
    ARBOL_MIN_HOJA,
    ATRIBUTOS_CLUSTER,
    KMEANS_MAX_ITER,
    KMEANS_TOL,
    MAX_K,
    MAX_LARGO_LHS,
    MIN_CONFIANZA,
    MIN_SOPORTE,
    OUTPUT_DIR,
    RANGO_EDAD_BINNING,
    RANGO_NOTA,
    SEMILLA_DEFECTO,
)
from src.datos.esquema import COLUMNA_CLASE, ESQUEMA_BASE, BinningSpec, Dataset
from src.datos.ingest_service import (
    PoliticaImputacion,
    discretize,
    leer_dataset,
    preprocess,
    serialize,
)
from src.datos.synth_service import cargar_mezcla, generate_cohort
from src.logic.cluster_engine import asignar_por_centros, kmeans, twostep
from src.logic.clustsim import comparar
from src.logic.eval_service import (
    LiftCurve,
    MiningLegend,
    SeleccionModelo,
    compare_models,
    graficar_lift,
    lift_curve,
    lift_curve_global,
    mining_legend,
    probabilidad_de_valor,
    texto_leyendas,
)
from src.logic.excel_service import ExcelService
from src.logic.profile_service import assign_labels, perfiles_a_csv, profile_clusters, texto_perfiles
from src.logic.rules_engine import (
    RuleSet,
    mine_rules,
    predict_rules,
    reglas_a_csv,
    ruleset_a_json,
    verificar_reglas,
)
from src.logic.tree_engine import (
    DecisionTree,
    arbol_a_json,
    precision_entrenamiento,
    predict_tree,
    texto_arbol,
    train_tree,
)
from src.utils.exceptions import ConfiguracionError, EtapaPipelineError, EvaluacionError, ModeloError, PerfilError
from src.utils.logger import configurar_logger
from src.utils.settings_manager import SettingsManager

logger = configurar_logger(__name__)

MARCA_INCOMPLETO = "INCOMPLETO"
OBJETIVOS = ("field", COLUMNA_CLASE)
MODELO_REGLAS = "association_rules"
MODELO_ARBOL = "decision_tree"


@dataclass
class PipelineConfig:
    """Configuración de una ejecución; sin rutas de entrada se generan cohortes sintéticas."""

    entrada_train: str | None = None
    entrada_test: str | None = None
    anio_train: int = 2008
    anio_test: int = 2009
    mezcla: str | None = None
    n_train: int = 3000
    n_test: int = 1000
    atributos_cluster: list[str] = field(default_factory=lambda: list(ATRIBUTOS_CLUSTER))
    cortes: dict[str, list[float]] = field(default_factory=dict)
    entradas_modelo: list[str] | None = None
    min_support: float = MIN_SOPORTE
    min_confidence: float = MIN_CONFIANZA
    max_lhs_len: int = MAX_LARGO_LHS
    max_depth: int = ARBOL_MAX_PROFUNDIDAD
    min_leaf: int = ARBOL_MIN_HOJA
    min_gain: float = ARBOL_MIN_GANANCIA
    max_k: int = MAX_K
    seed: int = SEMILLA_DEFECTO
    salida: str = str(OUTPUT_DIR)
    imputacion_continua: str = "mediana"
    imputacion_categorica: str = "moda"

    def validar(self) -> None:
        if self.anio_train == self.anio_test:
            raise ConfiguracionError("Los años de entrenamiento y prueba deben ser distintos.")
        nombres = {a.nombre for a in ESQUEMA_BASE}
        desconocidos = [a for a in self.atributos_cluster if a not in nombres]
        desconocidos += [a for a in (self.entradas_modelo or []) if a not in nombres | {COLUMNA_CLASE}]
        desconocidos += [a for a in self.cortes if a not in ("grade", "age")]
        if desconocidos:
            raise ConfiguracionError(f"Atributos inexistentes en el esquema: {desconocidos}")
        if self.max_k < 1:
            raise ConfiguracionError("max_k debe ser >= 1.")

    @property
    def politica(self) -> PoliticaImputacion:
        return PoliticaImputacion(self.imputacion_continua, self.imputacion_categorica)

    @classmethod
    def desde_archivo(cls, ruta: Path | str) -> "PipelineConfig":
        gestor = SettingsManager(ruta, defaults=asdict(cls()))
        conocidas = set(asdict(cls()))
        extra = set(gestor.config) - conocidas
        if extra:
            raise ConfiguracionError(f"Claves desconocidas en '{ruta}': {sorted(extra)}")
        try:
            return cls(**gestor.config)
        except TypeError as e:
            raise ConfiguracionError(f"Configuración inválida en '{ruta}': {e}") from e


@dataclass
class ResultadoObjetivo:
    objetivo: str
    reglas: RuleSet
    arbol: DecisionTree
    leyendas: dict[str, MiningLegend]
    curvas: dict[str, LiftCurve]
    seleccion: SeleccionModelo


@dataclass
class ReporteEjecucion:
    k: int
    directorio: Path
    selecciones: dict[str, str]
    resumen: str
    eventos: list[tuple[str, str]]
    completo: bool = True


class PipelineService:
    def __init__(self, cfg: PipelineConfig):
        cfg.validar()
        self.cfg = cfg
        self.salida = Path(cfg.salida)
        self.eventos: list[tuple[str, str]] = []
        self._etapa_actual = ""

    # --- Infraestructura de etapas ---

    def _evento(self, accion: str):
        self.eventos.append((self._etapa_actual, accion))
        logger.debug(f"[{self._etapa_actual}] {accion}")

    def _ejecutar(self, etapa: str, funcion, *args):
        self._etapa_actual = etapa
        logger.info(f"--- INICIANDO ETAPA {etapa.upper()} ---")
        self._evento("inicio")
        try:
            resultado = funcion(*args)
        except EtapaPipelineError:
            raise
        except Exception as e:
            logger.error(f"Error en la etapa '{etapa}': {e}", exc_info=True)
            raise EtapaPipelineError(etapa, str(e)) from e
        self._evento("fin")
        return resultado

    def _verificar_higiene(self):
        """Ninguna lectura de la cohorte de prueba antes de la etapa de evaluación."""
        for etapa, accion in self.eventos:
            if accion == "lee cohorte prueba" and etapa != "evaluacion":
                raise EtapaPipelineError("artefactos", f"la etapa '{etapa}' leyó la cohorte de prueba")

    def _cohorte(self, ruta: str | None, anio: int, n: int, seed: int, accion: str) -> Dataset:
        self._evento(accion)
        if ruta is None:
            ds, _ = generate_cohort(cargar_mezcla(self.cfg.mezcla), n, seed, anio)
        else:
            ds = leer_dataset(ruta).filtrar_cohorte(anio)
        return preprocess(ds, self.cfg.politica)

    # --- Etapas ---

    def _etapa_ingesta(self) -> Dataset:
        train = self._cohorte(self.cfg.entrada_train, self.cfg.anio_train, self.cfg.n_train, self.cfg.seed,
                              "lee cohorte entrenamiento")
        if train.n < 2:
            raise ModeloError(f"La cohorte de entrenamiento {self.cfg.anio_train} tiene {train.n} filas utilizables.")
        return train

    def _etapa_kmeans(self, train: Dataset, k: int):
        clustering = kmeans(train, k, self.cfg.seed, KMEANS_MAX_ITER, KMEANS_TOL, self.cfg.atributos_cluster)
        clustering.verificar(train)
        return clustering

    def _etapa_etiquetado(self, train: Dataset, clustering):
        bandas = self._binning(train)
        perfiles = profile_clusters(train, clustering, bandas)
        etiquetas, etiquetado = assign_labels(perfiles, train, clustering)
        return perfiles, etiquetas, etiquetado

    def _binning(self, train: Dataset) -> BinningSpec:
        bandas = BinningSpec.por_defecto(train)
        if self.cfg.cortes:
            rangos = {"grade": RANGO_NOTA, "age": RANGO_EDAD_BINNING}
            manual = BinningSpec.desde_cortes({a: tuple(c) for a, c in self.cfg.cortes.items()}, rangos)
            bandas = BinningSpec({**bandas.atributos, **manual.atributos})
        return bandas

    def _etapa_modelos(self, disc: Dataset, bandas: BinningSpec) -> dict[str, tuple[RuleSet, DecisionTree]]:
        modelos = {}
        for objetivo in OBJETIVOS:
            entradas = [a for a in (self.cfg.entradas_modelo or disc.nombres) if a != objetivo]
            reglas = mine_rules(
                disc, objetivo, self.cfg.min_support, self.cfg.min_confidence, self.cfg.max_lhs_len, entradas
            )
            verificar_reglas(reglas, disc)
            reglas = replace(reglas, binning=bandas.a_dict())
            arbol = train_tree(disc, objetivo, self.cfg.max_depth, self.cfg.min_leaf, self.cfg.min_gain, entradas)
            arbol.binning = bandas.a_dict()
            exactitud, base = precision_entrenamiento(arbol, disc)
            if exactitud + 1e-12 < base:
                raise ModeloError(f"Exactitud del árbol ({exactitud:.4f}) menor que la clase mayoritaria ({base:.4f}).")
            modelos[objetivo] = (reglas, arbol)
        return modelos

    def _etapa_evaluacion(self, clustering, etiquetas, bandas, modelos) -> tuple[Dataset, dict[str, ResultadoObjetivo]]:
        test = self._cohorte(self.cfg.entrada_test, self.cfg.anio_test, self.cfg.n_test, self.cfg.seed + 1,
                             "lee cohorte prueba")
        if test.n == 0:
            raise EvaluacionError(f"La cohorte de prueba {self.cfg.anio_test} está vacía.")

        clusters = asignar_por_centros(clustering, test)
        faltan = sorted({int(c) for c in clusters} - set(etiquetas))
        if faltan:
            raise PerfilError(f"Filas de prueba asignadas a clusters sin etiqueta: {faltan}")
        logger.warning(
            "La clase de verdad de la cohorte de prueba se asigna por el centro de K-means de entrenamiento más cercano."
        )
        test = test.con_atributo(COLUMNA_CLASE, "categorico", [etiquetas[int(c)].nombre for c in clusters],
                                 "clase de prueba por centro de K-means más cercano")
        disc = discretize(test, bandas)
        registros = disc.filas.astype(str).to_dict("records")

        resultados = {}
        for objetivo, (reglas, arbol) in modelos.items():
            verdades = [r[objetivo] for r in registros]
            predicciones = {
                MODELO_REGLAS: [predict_rules(reglas, r) for r in registros],
                MODELO_ARBOL: [predict_tree(arbol, r) for r in registros],
            }
            leyendas = {nombre: mining_legend(p, verdades) for nombre, p in predicciones.items()}
            curvas = {}
            for nombre, p in predicciones.items():
                if any(c == t for (c, _), t in zip(p, verdades)):
                    curvas[f"{nombre}_global"] = lift_curve_global(p, verdades)
                else:
                    logger.warning(f"{nombre} ({objetivo}) no acierta ninguna fila de prueba: se omite su lift global.")

            valor = _valor_mas_frecuente(verdades)
            n_clases = len({r.rhs[1] for r in reglas.reglas} | {reglas.clase_defecto} | set(arbol.raiz.distribucion))
            for nombre, p in predicciones.items():
                por_valor = [(valor, probabilidad_de_valor(x, valor, n_clases)) for x in p]
                curvas[f"{nombre}_{valor}"] = lift_curve(por_valor, verdades, valor)

            seleccion = compare_models(leyendas[MODELO_REGLAS], leyendas[MODELO_ARBOL], MODELO_REGLAS, MODELO_ARBOL)
            resultados[objetivo] = ResultadoObjetivo(objetivo, reglas, arbol, leyendas, curvas, seleccion)
        return test, resultados

    # --- Artefactos ---

    def _escribir(self, nombre: str, contenido: str):
        (self.salida / nombre).write_text(contenido, encoding="utf-8", newline="\n")

    def _etapa_artefactos(self, ctx: dict) -> str:
        self._verificar_higiene()
        s = self.salida
        self._escribir("train_preprocesado.csv", serialize(ctx["train"]))
        self._escribir("train_etiquetado.csv", serialize(ctx["etiquetado"]))
        self._escribir("test_etiquetado.csv", serialize(ctx["test"]))
        self._escribir("asignaciones_twostep.csv", ctx["twostep"].a_csv())
        self._escribir("asignaciones_kmeans.csv", ctx["kmeans"].a_csv())
        self._escribir("comparacion_clusterings.csv", pd.DataFrame([ctx["similitud"]]).to_csv(
            index=False, lineterminator="\n"))
        self._escribir("perfiles.txt", texto_perfiles(ctx["perfiles"], ctx["etiquetas"]))
        self._escribir("perfiles.csv", perfiles_a_csv(ctx["perfiles"], ctx["etiquetas"]))
        self._escribir("binning.json", json.dumps(ctx["bandas"].a_dict(), indent=2, sort_keys=True))

        tablas: dict[str, pd.DataFrame] = {
            "perfiles": pd.read_csv(s / "perfiles.csv"),
            "comparacion": pd.DataFrame([ctx["similitud"]]),
        }
        for objetivo, res in ctx["resultados"].items():
            self._escribir(f"reglas_{objetivo}.csv", reglas_a_csv(res.reglas))
            self._escribir(f"reglas_{objetivo}.json", ruleset_a_json(res.reglas))
            self._escribir(f"arbol_{objetivo}.txt", texto_arbol(res.arbol))
            self._escribir(f"arbol_{objetivo}.json", arbol_a_json(res.arbol))
            self._escribir(f"leyenda_{objetivo}.txt", texto_leyendas(res.leyendas))
            self._escribir(f"seleccion_{objetivo}.json", json.dumps(res.seleccion.a_dict(), indent=2, sort_keys=True))
            for nombre, curva in res.curvas.items():
                self._escribir(f"lift_{objetivo}_{nombre}.csv", curva.a_csv())
            globales = {n.removesuffix("_global"): c for n, c in res.curvas.items() if n.endswith("_global")}
            graficar_lift(globales, s / f"lift_{objetivo}.svg", f"Lift ({objetivo})")

            tablas[f"reglas_{objetivo}"] = pd.read_csv(s / f"reglas_{objetivo}.csv", dtype=str, keep_default_na=False)
            tablas[f"leyendas_{objetivo}"] = pd.DataFrame(
                [{"modelo": n, **asdict(ley)} for n, ley in res.leyendas.items()]
            )
            tablas[f"seleccion_{objetivo}"] = pd.DataFrame([res.seleccion.a_dict()])

        resumen = self._resumen(ctx)
        self._escribir("resumen.txt", resumen)
        self._escribir("procedencia.txt", "\n".join(f"{e}\t{a}" for e, a in self.eventos) + "\n")
        ExcelService(s).generar_libro(tablas)
        return resumen

    def _resumen(self, ctx: dict) -> str:
        cfg = self.cfg
        km = ctx["kmeans"]
        lineas = [
            "RESUMEN DE EJECUCIÓN",
            f"semilla: {cfg.seed}",
            f"cohorte de entrenamiento: {cfg.anio_train} ({ctx['train'].n} filas)",
            f"cohorte de prueba: {cfg.anio_test} ({ctx['test'].n} filas)",
            f"atributos de clustering: {', '.join(cfg.atributos_cluster)}",
            f"TwoStep: k = {ctx['twostep'].k}",
            f"K-means: k = {km.k}, objetivo = {km.objetivo:.6f}, tamaños = {km.tamanos().tolist()}",
            "TwoStep vs K-means: " + ", ".join(f"{n} = {v:.6f}" for n, v in ctx["similitud"].items()),
            "clases:",
        ]
        for cluster, etiqueta in sorted(ctx["etiquetas"].items(), key=lambda x: x[1].nombre):
            lineas.append(f"  {etiqueta.nombre} <- cluster {cluster} ({int(km.tamanos()[cluster])} filas)")
        lineas.append("clase de prueba asignada por el centro de K-means de entrenamiento más cercano")
        for objetivo, res in ctx["resultados"].items():
            hojas = sum(1 for _ in res.arbol.hojas())
            lineas += [
                "",
                f"OBJETIVO {objetivo}: {len(res.reglas)} reglas, {hojas} hojas",
                texto_leyendas(res.leyendas).rstrip("\n"),
                f"seleccionado: {res.seleccion.seleccionado} (margen {res.seleccion.margen:.6f}"
                + (", empate" if res.seleccion.empate else "") + ")",
            ]
        return "\n".join(lineas) + "\n"

    # --- Orquestación ---

    def run_pipeline(self) -> ReporteEjecucion:
        self.salida.mkdir(parents=True, exist_ok=True)
        marca = self.salida / MARCA_INCOMPLETO
        if marca.exists():
            marca.unlink()
        try:
            train = self._ejecutar("ingesta", self._etapa_ingesta)
            c_twostep = self._ejecutar("twostep", twostep, train, self.cfg.max_k, self.cfg.atributos_cluster, self.cfg.seed)
            c_kmeans = self._ejecutar("kmeans", self._etapa_kmeans, train, c_twostep.k)
            similitud = self._ejecutar("comparacion", comparar, c_twostep, c_kmeans, train)
            perfiles, etiquetas, etiquetado = self._ejecutar("etiquetado", self._etapa_etiquetado, train, c_kmeans)
            bandas = self._binning(train)
            disc = self._ejecutar("discretizar", discretize, etiquetado, bandas)
            modelos = self._ejecutar("modelos", self._etapa_modelos, disc, bandas)
            test, resultados = self._ejecutar("evaluacion", self._etapa_evaluacion, c_kmeans, etiquetas, bandas, modelos)
            ctx = {
                "train": train, "twostep": c_twostep, "kmeans": c_kmeans, "similitud": similitud,
                "perfiles": perfiles, "etiquetas": etiquetas, "etiquetado": etiquetado, "bandas": bandas,
                "test": test, "resultados": resultados,
            }
            resumen = self._ejecutar("artefactos", self._etapa_artefactos, ctx)
        except EtapaPipelineError as e:
            marca.write_text(f"etapa: {e.etapa}\ncausa: {e.causa}\n", encoding="utf-8")
            logger.critical(f"Pipeline abortado: {e}")
            raise

        logger.info(f"Pipeline completado. Artefactos en '{self.salida}'.")
        return ReporteEjecucion(
            k=c_kmeans.k,
            directorio=self.salida,
            selecciones={o: r.seleccion.seleccionado for o, r in resultados.items()},
            resumen=resumen,
            eventos=list(self.eventos),
        )


def _valor_mas_frecuente(valores: list[str]) -> str:
    conteo = pd.Series(valores).value_counts()
    maximo = conteo.max()
    return min(v for v, c in conteo.items() if c == maximo)


def run_pipeline(cfg: PipelineConfig) -> ReporteEjecucion:
    return PipelineService(cfg).run_pipeline()
