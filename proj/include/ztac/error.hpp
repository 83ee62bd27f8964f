#pragma once

#include <stdexcept>
#include <string>

namespace ztac {

// Every failure the decision path can produce. Service handlers map these to
// deny responses; nothing on the decision route may turn an error into permit.
enum class Errc {
  // opinion algebra
  ComponentOutOfRange,
  AdditivityViolated,
  EmptyInput,
  BaseRateMismatch,
  DogmaticOpinion,
  // attribute model
  DomainMismatch,
  WrongCodomainKind,
  UnmappedValue,
  CatalogFileInvalid,
  // engines
  MixedCodomain,
  UnknownAlgorithm,
  AttributeSetMismatch,
  // policy store
  UnknownAttributeId,
  DuplicateId,
  NoMatchingPolicy,
  // pip
  BackingStoreUnavailable,
  AttributeTimeout,
  // service
  MalformedRequest,
  Unauthenticated,
  // harness
  TargetUnreachable,
  SeedMismatch,
  IncomparableScenarios,
  // misc
  ConfigInvalid,
  Internal,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ztac
