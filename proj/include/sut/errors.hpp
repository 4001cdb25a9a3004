#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sut {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  int pivot_index;
  explicit NotPositiveDefinite(int pivot, const std::string& what)
      : Error(what), pivot_index(pivot) {}
};

struct NonFiniteInput : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ValidationFailure : Error {
  std::vector<std::string> violations;
  explicit ValidationFailure(std::vector<std::string> v)
      : Error(v.empty() ? "invalid parameters" : v.front()), violations(std::move(v)) {}
};

struct DofTooSmall : Error {
  using Error::Error;
};

struct TauMustBeZero : Error {
  using Error::Error;
};

struct AcceptanceTooLow : Error {
  using Error::Error;
};

struct DenominatorUnderflow : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct PsiNotPSD : Error {
  using Error::Error;
};

struct StructureNotReducible : Error {
  using Error::Error;
};

struct CanonicalNotExists : Error {
  using Error::Error;
};

struct ExtendedGammaNotPD : Error {
  using Error::Error;
};

}  // namespace sut
