#ifndef DILO_COMMON_HPP
#define DILO_COMMON_HPP

#include <stdexcept>
#include <string>

namespace dilo {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape/size mismatch between rasters, tensors or vectors.
class dimension_error : public error {
public:
  using error::error;
};

/// A caller-supplied value is outside its allowed range.
class parameter_error : public error {
public:
  using error::error;
};

/// File or directory level failure; message carries the path.
class io_error : public error {
public:
  using error::error;
};

/// Bad run configuration (unknown key, empty asset pool, ...).
class config_error : public error {
public:
  using error::error;
};

/// An invariant the library maintains internally was violated.
class internal_error : public error {
public:
  using error::error;
};

/// A metric is undefined for the given input (e.g. empty ground truth).
class metric_error : public error {
public:
  using error::error;
};

/// Procedural generation exhausted its rejection budget.
class generation_error : public error {
public:
  using error::error;
};

} // namespace dilo

#endif
