#pragma once

#include "tenf/tensor.hpp"

// Centered orthonormal 2-D Fourier transforms over the first two modes of a
// channel-pair tensor (..., 2). The trailing mode carries real/imag, so the
// two channels are contiguous halves of the buffer. Both directions are
// unitary: fft2c(ifft2c(x)) == x and the Frobenius norm is preserved, which
// makes each transform's adjoint equal to its inverse.

namespace tenf::fftc {

Tensor fft2c(const Tensor &x);
Tensor ifft2c(const Tensor &x);

} // namespace tenf::fftc
