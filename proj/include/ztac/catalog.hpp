#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ztac/attribute.hpp"

namespace ztac {

// Immutable set of attribute definitions loaded from one catalog document.
// Load-time validation is exhaustive so evaluation never has to re-check
// structure; after construction the catalog is safe for unrestricted
// concurrent reads.
class Catalog {
 public:
  // Parses and validates a catalog document. `source_name` labels error
  // messages. Parse errors report line:column; semantic errors report the
  // JSON path and attribute id. Throws CatalogFileInvalid.
  static Catalog from_json_text(const std::string& text,
                                const std::string& source_name = "<memory>");
  static Catalog from_file(const std::string& path);

  // The catalog compiled into the binary (byte-identical to data/catalog.json).
  static const Catalog& default_catalog();

  const std::vector<AttributeDefinition>& definitions() const { return defs_; }
  std::size_t size() const { return defs_.size(); }

  // nullptr when the id is unknown.
  const AttributeDefinition* find(const std::string& id) const;
  // Throws UnknownAttributeId.
  const AttributeDefinition& at(const std::string& id) const;

  std::vector<const AttributeDefinition*> by_category(Category c) const;

 private:
  std::vector<AttributeDefinition> defs_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace ztac
