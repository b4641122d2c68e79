"""Compiled path-dependent TreeSHAP for one tree with vector-valued leaves.

Cover fractions are supplied per node (``frac[child] = cover[child] /
cover[parent]``, 0 when the parent has no cover), so the same routine
serves any background set.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _extend(fi, zf, of, pw, ud, pz, po, pidx):
    fi[ud] = pidx
    zf[ud] = pz
    of[ud] = po
    pw[ud] = 1.0 if ud == 0 else 0.0
    for i in range(ud - 1, -1, -1):
        pw[i + 1] += po * pw[i] * (i + 1) / (ud + 1)
        pw[i] = pz * pw[i] * (ud - i) / (ud + 1)


@njit(cache=True)
def _unwind(fi, zf, of, pw, ud, path_index):
    one = of[path_index]
    zero = zf[path_index]
    nxt = pw[ud]
    for i in range(ud - 1, -1, -1):
        if one != 0.0:
            tmp = pw[i]
            pw[i] = nxt * (ud + 1) / ((i + 1) * one)
            nxt = tmp - pw[i] * zero * (ud - i) / (ud + 1)
        else:
            pw[i] = pw[i] * (ud + 1) / (zero * (ud - i))
    for i in range(path_index, ud):
        fi[i] = fi[i + 1]
        zf[i] = zf[i + 1]
        of[i] = of[i + 1]


@njit(cache=True)
def _unwound_sum(zf, of, pw, ud, path_index):
    one = of[path_index]
    zero = zf[path_index]
    nxt = pw[ud]
    total = 0.0
    for i in range(ud - 1, -1, -1):
        if one != 0.0:
            tmp = nxt * (ud + 1) / ((i + 1) * one)
            total += tmp
            nxt = pw[i] - tmp * zero * ((ud - i) / (ud + 1))
        elif zero != 0.0:
            total += (pw[i] / zero) / ((ud - i) / (ud + 1))
    return total


@njit(cache=True)
def _shap_one(left, right, feature, threshold, output, frac, x, phi,
              FI, ZF, OF, PW, stack_i, stack_f):
    # Depth-first walk with an explicit stack. Row ``level`` of the path
    # buffers holds the unique path at that depth; a child copies its
    # parent's row, which stays intact until both children are done.
    # stack_i rows: node, level, ud, pidx; stack_f rows: pz, po
    top = 0
    stack_i[0, 0] = 0
    stack_i[0, 1] = 0
    stack_i[0, 2] = 0
    stack_i[0, 3] = -1
    stack_f[0, 0] = 1.0
    stack_f[0, 1] = 1.0
    top = 1
    while top > 0:
        top -= 1
        node = stack_i[top, 0]
        level = stack_i[top, 1]
        ud = stack_i[top, 2]
        pidx = stack_i[top, 3]
        pz = stack_f[top, 0]
        po = stack_f[top, 1]

        fi = FI[level]
        zf = ZF[level]
        of = OF[level]
        pw = PW[level]
        if level > 0:
            for i in range(ud):
                fi[i] = FI[level - 1, i]
                zf[i] = ZF[level - 1, i]
                of[i] = OF[level - 1, i]
                pw[i] = PW[level - 1, i]
        _extend(fi, zf, of, pw, ud, pz, po, pidx)

        split = feature[node]
        if split < 0:
            for i in range(1, ud + 1):
                w = _unwound_sum(zf, of, pw, ud, i)
                scale = w * (of[i] - zf[i])
                for c in range(output.shape[1]):
                    phi[fi[i], c] += scale * output[node, c]
            continue

        if x[split] <= threshold[node]:
            hot = left[node]
            cold = right[node]
        else:
            hot = right[node]
            cold = left[node]
        iz = 1.0
        io = 1.0
        path_index = -1
        for k in range(ud + 1):
            if fi[k] == split:
                path_index = k
                break
        if path_index >= 0:
            iz = zf[path_index]
            io = of[path_index]
            _unwind(fi, zf, of, pw, ud, path_index)
            ud -= 1

        # cold pushed first so the hot subtree is walked first
        cz = frac[cold] * iz
        if cz != 0.0:
            stack_i[top, 0] = cold
            stack_i[top, 1] = level + 1
            stack_i[top, 2] = ud + 1
            stack_i[top, 3] = split
            stack_f[top, 0] = cz
            stack_f[top, 1] = 0.0
            top += 1
        hz = frac[hot] * iz
        if hz != 0.0 or io != 0.0:
            stack_i[top, 0] = hot
            stack_i[top, 1] = level + 1
            stack_i[top, 2] = ud + 1
            stack_i[top, 3] = split
            stack_f[top, 0] = hz
            stack_f[top, 1] = io
            top += 1


@njit(cache=True)
def tree_shap_batch(left, right, feature, threshold, output, frac, max_depth, X, out):
    """Add each row's Shapley values for this tree into ``out`` (n, d, C)."""
    size = max_depth + 3
    FI = np.empty((size, size), np.int64)
    ZF = np.empty((size, size))
    OF = np.empty((size, size))
    PW = np.empty((size, size))
    stack_i = np.empty((2 * size + 2, 4), np.int64)
    stack_f = np.empty((2 * size + 2, 2))
    for r in range(X.shape[0]):
        _shap_one(left, right, feature, threshold, output, frac, X[r], out[r],
                  FI, ZF, OF, PW, stack_i, stack_f)
