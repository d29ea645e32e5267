"""Slow, direct reimplementations used as independent test oracles.

Plain Python over row-major lists; nothing here imports from marlfs.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import product


def sq_dist(a, b, subset):
    return sum((a[j] - b[j]) ** 2 for j in subset)


def knn_label(train_rows, train_labels, query, subset, k):
    scored = sorted(((sq_dist(query, r, subset), i) for i, r in enumerate(train_rows)))
    votes = sum(train_labels[i] for _, i in scored[:k])
    return 1 if votes * 2 > k else 0


def metric(pred, actual, name):
    tp = sum(1 for p, a in zip(pred, actual) if p == 1 and a == 1)
    fp = sum(1 for p, a in zip(pred, actual) if p == 1 and a == 0)
    tn = sum(1 for p, a in zip(pred, actual) if p == 0 and a == 0)
    fn = sum(1 for p, a in zip(pred, actual) if p == 0 and a == 1)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    values = {
        "accuracy": (tp + tn) / len(pred),
        "precision": prec,
        "recall": rec,
        "f_score": 2 * prec * rec / (prec + rec) if prec + rec else 0.0,
    }
    return values[name]


def kfold_performance(rows, labels, folds, subset, k_neighbors=3, name="f_score"):
    subset = sorted(subset)
    if not subset:
        return 0.0
    scores = []
    for fold in sorted(set(folds)):
        tr = [i for i in range(len(rows)) if folds[i] != fold]
        va = [i for i in range(len(rows)) if folds[i] == fold]
        pred = [knn_label([rows[i] for i in tr], [labels[i] for i in tr], rows[q], subset, k_neighbors)
                for q in va]
        scores.append(metric(pred, [labels[q] for q in va], name))
    return sum(scores) / len(scores)


def penalised(p, size, b):
    return p if size <= b else p / (size / b)


def pearson(xs, ys):
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def ucfs_select(columns, labels, n):
    scores = [pearson(c, labels) ** 2 for c in columns]
    order = sorted(range(len(columns)), key=lambda j: (-scores[j], j))
    return sorted(order[:n]), scores


def mutual_info(a, b):
    n = len(a)
    pa, pb, pab = Counter(a), Counter(b), Counter(zip(a, b))
    return sum(c / n * math.log((c / n) / ((pa[x] / n) * (pb[y] / n))) for (x, y), c in pab.items())


def greedy_mrmr(columns, labels, n, tol=1e-12):
    rel = [mutual_info(c, labels) for c in columns]
    chosen = []
    while len(chosen) < n:
        best, best_j = None, None
        for j in range(len(columns)):
            if j in chosen:
                continue
            s = rel[j]
            if chosen:
                s -= sum(mutual_info(columns[j], columns[i]) for i in chosen) / len(chosen)
            if best is None or s > best + tol:
                best, best_j = s, j
        chosen.append(best_j)
    return chosen


def all_subsets(f):
    for bits in product((0, 1), repeat=f):
        yield [j for j in range(f) if bits[j]]
