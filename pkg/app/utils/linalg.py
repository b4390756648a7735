import itertools
from typing import Iterator, List, Sequence

import galois
import numpy as np


def zeros(GF, rows: int, cols: int):
    return GF.Zeros((rows, cols))


def identity(GF, n: int):
    return GF.Identity(n)


def rank(matrix) -> int:
    """矩阵的秩, 允许空矩阵"""
    if 0 in matrix.shape:
        return 0
    return int(np.linalg.matrix_rank(matrix))


def null_space(GF, matrix, cols: int):
    """{x : Mx = 0} 的一组基, 按行返回"""
    if cols == 0:
        return GF.Zeros((0, 0))
    if matrix.shape[0] == 0:
        return GF.Identity(cols)
    basis = matrix.null_space()
    return basis.reshape((-1, cols))


def column_basis(GF, matrix):
    """列空间的一组基, 按列返回"""
    rows, cols = matrix.shape
    if rows == 0 or cols == 0:
        return GF.Zeros((rows, 0))
    reduced = matrix.T.row_reduce()
    keep = [k for k in range(reduced.shape[0]) if np.any(reduced[k] != 0)]
    return reduced[keep, :].T if keep else GF.Zeros((rows, 0))


def hstack(GF, blocks: Sequence, rows: int):
    blocks = [b for b in blocks if b.shape[1]]
    if not blocks:
        return GF.Zeros((rows, 0))
    return np.hstack(blocks).view(GF)


def block_diag(GF, blocks: Sequence):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = GF.Zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def combinations(GF, basis) -> Iterator:
    """基向量 (按行) 的全部 F_q 线性组合"""
    k, n = basis.shape
    for coeffs in itertools.product(range(GF.order), repeat=k):
        vec = GF.Zeros(n)
        for c, row in zip(coeffs, basis):
            if c:
                vec = vec + GF(c) * row
        yield vec


def all_vectors(GF, n: int) -> Iterator:
    for coeffs in itertools.product(range(GF.order), repeat=n):
        yield GF(list(coeffs)) if n else GF.Zeros(0)


def complement_basis(GF, span, dim: int) -> List:
    """把 span 的列空间补成全空间, 返回补空间的标准基向量"""
    current = span if span.shape[1] else GF.Zeros((dim, 0))
    base_rank = rank(current)
    out = []
    for k in range(dim):
        e = GF.Zeros((dim, 1))
        e[k, 0] = 1
        trial = hstack(GF, [current, e], dim)
        r = rank(trial)
        if r > base_rank:
            current, base_rank = trial, r
            out.append(e[:, 0])
    return out


def poly_of_matrix(GF, poly: galois.Poly, matrix):
    """Horner 法计算 poly(matrix)"""
    n = matrix.shape[0]
    result = GF.Zeros((n, n))
    for c in poly.coeffs:
        result = result @ matrix + GF(int(c)) * GF.Identity(n)
    return result


def companion(GF, poly: galois.Poly):
    """首一多项式的友矩阵, 基为 1, z, ..., z^{m-1}"""
    m = poly.degree
    coeffs_asc = list(reversed([int(c) for c in poly.coeffs]))
    out = GF.Zeros((m, m))
    for k in range(m - 1):
        out[k + 1, k] = 1
    for k in range(m):
        out[k, m - 1] = -GF(coeffs_asc[k])
    return out
