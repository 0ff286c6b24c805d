"""Smoke test for the shapevo_py extension module."""

import math

import shapevo_py as sv


def main():
    train, test = sv.gen_imbalanced_threeclass(seed=0)
    assert train.n_classes == 3 and len(train) == 35, repr(train)
    assert train.class_counts() == [25, 5, 5]

    assert sv.subsequence_distance([1.0, 2.0], [0.0, 1.0, 2.0, 3.0]) == 0.0
    assert sv.dtw_distance([0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 2.0]) == 0.0

    cfg = sv.GaConfig.defaults_for(train.min_len, seed=1)
    cfg.population_size = 20
    cfg.max_generations = 10
    result = sv.evolve(train, cfg)
    assert result.shapelets, "no shapelets"
    assert result.complexity == sum(len(s) for s in result.shapelets)
    assert result.runlog_csv.splitlines()[0].startswith("generation,")

    again = sv.evolve(train, cfg)
    assert again.shapelets == result.shapelets, "same seed must give the same result"

    err, complexity = sv.evaluate_fitness(result.shapelets, train)
    assert math.isclose(err, result.error, abs_tol=1e-9) and complexity == result.complexity

    dist = sv.distance_matrix(result.shapelets, test)
    assert len(dist) == len(test) and len(dist[0]) == len(result.shapelets)

    report = sv.tune_and_evaluate(result.shapelets, train, test)
    assert 0.0 <= report["accuracy"] <= 1.0
    print(f"accuracy {report['accuracy']:.4f} with {report['n_shapelets']} shapelets")

    top = sv.top_k_independent(train, 2)
    assert len(top) == 2 and top[0][1] >= top[1][1]

    try:
        sv.subsequence_distance([], [1.0])
    except sv.ShapevoError:
        pass
    else:
        raise AssertionError("empty shapelet accepted")

    print("smoke test OK")


if __name__ == "__main__":
    main()
