#include "ztac/error.hpp"

namespace ztac {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ComponentOutOfRange: return "ComponentOutOfRange";
    case Errc::AdditivityViolated: return "AdditivityViolated";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BaseRateMismatch: return "BaseRateMismatch";
    case Errc::DogmaticOpinion: return "DogmaticOpinion";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::WrongCodomainKind: return "WrongCodomainKind";
    case Errc::UnmappedValue: return "UnmappedValue";
    case Errc::CatalogFileInvalid: return "CatalogFileInvalid";
    case Errc::MixedCodomain: return "MixedCodomain";
    case Errc::UnknownAlgorithm: return "UnknownAlgorithm";
    case Errc::AttributeSetMismatch: return "AttributeSetMismatch";
    case Errc::UnknownAttributeId: return "UnknownAttributeId";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::NoMatchingPolicy: return "NoMatchingPolicy";
    case Errc::BackingStoreUnavailable: return "BackingStoreUnavailable";
    case Errc::AttributeTimeout: return "AttributeTimeout";
    case Errc::MalformedRequest: return "MalformedRequest";
    case Errc::Unauthenticated: return "Unauthenticated";
    case Errc::TargetUnreachable: return "TargetUnreachable";
    case Errc::SeedMismatch: return "SeedMismatch";
    case Errc::IncomparableScenarios: return "IncomparableScenarios";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace ztac
