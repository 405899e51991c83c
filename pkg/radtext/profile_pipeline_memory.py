from memory_profiler import memory_usage
import psutil

try:
    from radtext import collect, synthetic
    from radtext.pipeline import Pipeline
except ImportError:
    import collect
    import synthetic
    from pipeline import Pipeline


def exercise_pipeline(reports=200):
    """Annotate synthetic reports end to end and score them, like a batch run would."""
    data = synthetic.generate_reports(reports, seed=0)
    collection = synthetic.reports_collection(data)

    # deid has nothing to find in synthetic reports; leave it out
    annotate = Pipeline(annotators=["secsplit", "ssplit", "ner", "parse", "tree2dep", "neg"], jobs=4)
    result = annotate(collection)

    records = collect.collect_labels(result, list(synthetic.FINDING_PHRASES))
    gold = {(r.doc_id, c): s for r in data for c, s in r.gold.items()}
    scores = collect.score_labels(records, gold)
    print("Macro F1:", round(scores["macro"].f1, 4))


def main():
    mem_usage = memory_usage(
        (exercise_pipeline, (), {}),
        interval=0.1,
        retval=False,
    )
    print("Memory samples (MiB):", mem_usage)
    print("Peak memory (MiB):", max(mem_usage))
    print("CPU time (s):", round(sum(psutil.Process().cpu_times()[:2]), 2))


if __name__ == "__main__":
    main()
