#pragma once

#include <stdexcept>
#include <string>

namespace lapdecon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// laplace_kernel
class DegenerateKernel : public Error {
 public:
  using Error::Error;
};

class UnstableKernel : public Error {
 public:
  using Error::Error;
};

class NonnegativeRealPartZero : public Error {
 public:
  using Error::Error;
};

class IllConditionedRoots : public Error {
 public:
  using Error::Error;
};

// deriv_kernels
class SingularMomentSystem : public Error {
 public:
  using Error::Error;
};

class InvalidKernel : public Error {
 public:
  using Error::Error;
};

// lrd_noise
class EmbeddingFailure : public Error {
 public:
  using Error::Error;
};

// estimator
class BandwidthOutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyGrid : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// harness / config
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lapdecon
