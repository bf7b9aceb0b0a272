# -*- coding: utf-8 -*-
"""
Subcomandos de la línea de comandos.

Cada subcomando lee sus entradas desde CSV/JSON, llama a la operación
correspondiente y escribe su salida en --out. Cualquier MineriaError o error
de E/S se convierte en código de salida 1 con el mensaje etiquetado por etapa.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from config.config import (
    ADCO_BINS,
    ANIO_REFERENCIA,
    ARBOL_MAX_PROFUNDIDAD,
    ARBOL_MIN_GANANCIA,
    ARBOL_MIN_HOJA,
    MAX_K,
    MAX_LARGO_LHS,
    MIN_CONFIANZA,
    MIN_SOPORTE,
    SEMILLA_DEFECTO,
)
from src.datos.esquema import COLUMNA_ID, BinningSpec, Dataset
from src.datos.ingest_service import PoliticaImputacion, discretize, leer_dataset, preprocess, serialize
from src.datos.synth_service import cargar_mezcla, generate_cohort
from src.logic.cluster_engine import agglomerate, kmeans, leer_asignaciones, twostep
from src.logic.clustsim import comparar
from src.logic.eval_service import lift_curve_global, mining_legend, texto_leyendas
from src.logic.pipeline_service import PipelineConfig, run_pipeline
from src.logic.profile_service import assign_labels, perfiles_a_csv, profile_clusters, texto_perfiles
from src.logic.rules_engine import (
    mine_rules,
    predict_rules,
    reglas_a_csv,
    ruleset_a_dict,
    ruleset_desde_dict,
)
from src.logic.tree_engine import arbol_a_dict, arbol_desde_dict, predict_tree, texto_arbol, train_tree
from src.utils.exceptions import ConfiguracionError, EtapaPipelineError, MineriaError, ModeloError
from src.utils.logger import configurar_logger

logger = configurar_logger("cli")


def _escribir(ruta: Path | str, contenido: str) -> Path:
    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text(contenido, encoding="utf-8", newline="\n")
    return ruta


def _dataset(ruta: str, args) -> Dataset:
    politica = PoliticaImputacion(args.imputacion_continua, args.imputacion_categorica)
    return preprocess(leer_dataset(ruta, args.anio_referencia), politica)


# --- Handlers ---

def cmd_ingest(args) -> int:
    crudo = leer_dataset(args.entrada, args.anio_referencia)
    ds = preprocess(crudo, PoliticaImputacion(args.imputacion_continua, args.imputacion_categorica))
    _escribir(args.out, serialize(ds))
    if crudo.procedencia.rechazos:
        rechazos = pd.DataFrame([asdict(r) for r in crudo.procedencia.rechazos])
        _escribir(Path(args.out).with_suffix(".rechazos.csv"), rechazos.to_csv(index=False, lineterminator="\n"))
    print(f"{ds.n} filas aceptadas, {len(crudo.procedencia.rechazos)} rechazadas -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    ds, verdad = generate_cohort(cargar_mezcla(args.mezcla), args.n, args.seed, args.anio)
    _escribir(args.out, serialize(ds))
    if args.verdad:
        _escribir(args.verdad, verdad.to_csv(index=False, lineterminator="\n"))
    print(f"{ds.n} candidatos sintéticos (semilla {args.seed}) -> {args.out}")
    return 0


def cmd_cluster(args) -> int:
    ds = _dataset(args.entrada, args)
    atributos = args.atributos.split(",") if args.atributos else None
    if args.metodo == "kmeans":
        if args.k is None:
            raise ConfiguracionError("K-means requiere --k.")
        clustering = kmeans(ds, args.k, args.seed, atributos=atributos, n_reinicios=args.reinicios)
    else:
        clustering = twostep(ds, args.max_k, atributos, args.seed)
    _escribir(args.out, clustering.a_csv())
    if args.traza:
        _escribir(args.traza, agglomerate(ds, args.max_k, atributos, args.seed).a_csv())
    print(f"{args.metodo}: k = {clustering.k}, tamaños {clustering.tamanos().tolist()} -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    ds = _dataset(args.entrada, args)
    c1 = leer_asignaciones(Path(args.a).read_text(encoding="utf-8"), ds)
    c2 = leer_asignaciones(Path(args.b).read_text(encoding="utf-8"), ds)
    fila = pd.DataFrame([comparar(c1, c2, ds, args.bins)]).to_csv(index=False, lineterminator="\n")
    if args.out:
        _escribir(args.out, fila)
    print(fila, end="")
    return 0


def cmd_label(args) -> int:
    ds = _dataset(args.entrada, args)
    clustering = leer_asignaciones(Path(args.asignaciones).read_text(encoding="utf-8"), ds)
    perfiles = profile_clusters(ds, clustering, BinningSpec.por_defecto(ds))
    etiquetas, etiquetado = assign_labels(perfiles, ds, clustering)
    salida = Path(args.out)
    _escribir(salida, serialize(etiquetado))
    _escribir(salida.with_suffix(".perfiles.txt"), texto_perfiles(perfiles, etiquetas))
    _escribir(salida.with_suffix(".perfiles.csv"), perfiles_a_csv(perfiles, etiquetas))
    print(texto_perfiles(perfiles, etiquetas), end="")
    return 0


def cmd_train(args) -> int:
    ds = _dataset(args.entrada, args)
    bandas = BinningSpec.por_defecto(ds)
    disc = discretize(ds, bandas)
    entradas = args.entradas.split(",") if args.entradas else None
    if args.modelo == "reglas":
        rs = mine_rules(disc, args.objetivo, args.min_support, args.min_confidence, args.max_lhs_len, entradas)
        modelo = {**ruleset_a_dict(rs), "binning": bandas.a_dict()}
        _escribir(Path(args.out).with_suffix(".csv"), reglas_a_csv(rs))
        print(f"{len(rs)} reglas para '{args.objetivo}'")
    else:
        arbol = train_tree(disc, args.objetivo, args.max_depth, args.min_leaf, args.min_gain, entradas)
        arbol.binning = bandas.a_dict()
        modelo = arbol_a_dict(arbol)
        _escribir(Path(args.out).with_suffix(".txt"), texto_arbol(arbol))
        print(texto_arbol(arbol), end="")
    _escribir(args.out, json.dumps(modelo, indent=2, ensure_ascii=False, sort_keys=True))
    return 0


def _cargar_modelo(ruta: str):
    try:
        datos = json.loads(Path(ruta).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ModeloError(f"No se pudo leer el modelo '{ruta}': {e}") from e
    if datos.get("tipo") == "reglas":
        modelo = ruleset_desde_dict(datos)
        return modelo, lambda r: predict_rules(modelo, r)
    if datos.get("tipo") == "arbol":
        modelo = arbol_desde_dict(datos)
        return modelo, lambda r: predict_tree(modelo, r)
    raise ModeloError(f"Tipo de modelo desconocido en '{ruta}'.")


def _predecir(args):
    modelo, predictor = _cargar_modelo(args.modelo)
    ds = _dataset(args.entrada, args)
    disc = discretize(ds, BinningSpec.desde_dict(modelo.binning))
    registros = disc.filas.astype(str).to_dict("records")
    return modelo, disc, registros, [predictor(r) for r in registros]


def cmd_evaluate(args) -> int:
    modelo, _, registros, predicciones = _predecir(args)
    verdades = [r.get(modelo.objetivo) for r in registros]
    if any(v is None for v in verdades):
        raise ModeloError(f"El dataset de evaluación no tiene la columna objetivo '{modelo.objetivo}'.")
    leyenda = mining_legend(predicciones, verdades)
    salida = Path(args.out)
    salida.mkdir(parents=True, exist_ok=True)
    _escribir(salida / "leyenda.txt", texto_leyendas({Path(args.modelo).stem: leyenda}))
    _escribir(salida / "lift.csv", lift_curve_global(predicciones, verdades).a_csv())
    print(texto_leyendas({Path(args.modelo).stem: leyenda}), end="")
    return 0


def cmd_predict(args) -> int:
    modelo, disc, _, predicciones = _predecir(args)
    tabla = pd.DataFrame({
        COLUMNA_ID: disc.ids,
        "prediction": [p for p, _ in predicciones],
        "probability": [q for _, q in predicciones],
    })
    _escribir(args.out, tabla.to_csv(index=False, lineterminator="\n"))
    print(f"{len(tabla)} predicciones de '{modelo.objetivo}' -> {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = PipelineConfig.desde_archivo(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.salida = args.out
    reporte = run_pipeline(cfg)
    print(reporte.resumen, end="")
    return 0


# --- Parser ---

def _opciones_ingesta(p: argparse.ArgumentParser):
    p.add_argument("--anio-referencia", type=int, default=ANIO_REFERENCIA, dest="anio_referencia")
    p.add_argument("--imputacion-continua", choices=["mediana", "descartar"], default="mediana")
    p.add_argument("--imputacion-categorica", choices=["moda", "unknown", "descartar"], default="moda")


def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minado", description="Minería de datos de candidatos admitidos.")
    sub = parser.add_subparsers(dest="comando", required=True)

    p = sub.add_parser("ingest", help="Valida y preprocesa un CSV de candidatos.")
    p.add_argument("entrada")
    p.add_argument("--out", required=True)
    _opciones_ingesta(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="Genera una cohorte sintética.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=SEMILLA_DEFECTO)
    p.add_argument("--anio", type=int, default=2008)
    p.add_argument("--mezcla", default=None)
    p.add_argument("--verdad", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="Agrupa con TwoStep (K automático) o K-means.")
    p.add_argument("entrada")
    p.add_argument("--metodo", choices=["twostep", "kmeans"], default="twostep")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-k", type=int, default=MAX_K, dest="max_k")
    p.add_argument("--reinicios", type=int, default=1)
    p.add_argument("--atributos", default=None)
    p.add_argument("--traza", default=None)
    p.add_argument("--seed", type=int, default=SEMILLA_DEFECTO)
    p.add_argument("--out", required=True)
    _opciones_ingesta(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compare-clusterings", help="Rand, Jaccard y ADCO entre dos asignaciones.")
    p.add_argument("entrada")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--bins", type=int, default=ADCO_BINS)
    p.add_argument("--out", default=None)
    _opciones_ingesta(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("label", help="Perfila clusters y agrega la columna 'class'.")
    p.add_argument("entrada")
    p.add_argument("asignaciones")
    p.add_argument("--out", required=True)
    _opciones_ingesta(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="Entrena reglas de asociación o un árbol de decisión.")
    p.add_argument("entrada")
    p.add_argument("--objetivo", default="field")
    p.add_argument("--modelo", choices=["reglas", "arbol"], default="reglas")
    p.add_argument("--entradas", default=None)
    p.add_argument("--min-support", type=float, default=MIN_SOPORTE, dest="min_support")
    p.add_argument("--min-confidence", type=float, default=MIN_CONFIANZA, dest="min_confidence")
    p.add_argument("--max-lhs-len", type=int, default=MAX_LARGO_LHS, dest="max_lhs_len")
    p.add_argument("--max-depth", type=int, default=ARBOL_MAX_PROFUNDIDAD, dest="max_depth")
    p.add_argument("--min-leaf", type=int, default=ARBOL_MIN_HOJA, dest="min_leaf")
    p.add_argument("--min-gain", type=float, default=ARBOL_MIN_GANANCIA, dest="min_gain")
    p.add_argument("--out", required=True)
    _opciones_ingesta(p)
    p.set_defaults(func=cmd_train)

    for nombre, func, ayuda in (
        ("evaluate", cmd_evaluate, "Leyenda de minería y lift de un modelo sobre un dataset etiquetado."),
        ("predict", cmd_predict, "Predicciones de un modelo para cada fila."),
    ):
        p = sub.add_parser(nombre, help=ayuda)
        p.add_argument("modelo")
        p.add_argument("entrada")
        p.add_argument("--out", required=True)
        _opciones_ingesta(p)
        p.set_defaults(func=func)

    p = sub.add_parser("run", help="Pipeline completo.")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = construir_parser().parse_args(argv)
    try:
        return args.func(args)
    except EtapaPipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except MineriaError as e:
        logger.error(f"[{args.comando}] {e}")
        print(f"error: [{args.comando}] {e}", file=sys.stderr)
        return 1
    except OSError as e:
        logger.error(f"[{args.comando}] error de E/S: {e}")
        print(f"error: [{args.comando}] {e}", file=sys.stderr)
        return 1
