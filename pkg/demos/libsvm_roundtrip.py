"""Generate a synthetic sign-regression dataset, write it as LIBSVM and read it back."""

import io

import numpy as np

from adadiff.data import SyntheticSpec, dump_libsvm, gen_synthetic, parse_libsvm


def main():
    data, w_true = gen_synthetic(SyntheticSpec(N=5, d=6, nnz=2, seed=1))
    buf = io.StringIO()
    dump_libsvm(data, buf)
    text = buf.getvalue()
    print(text)
    back = parse_libsvm(text, n_features=data.d)
    print("support of the planted vector:", np.flatnonzero(w_true))
    print("round trip exact:", np.array_equal(back.dense(), data.dense()) and np.array_equal(back.b, data.b))


if __name__ == "__main__":
    main()
