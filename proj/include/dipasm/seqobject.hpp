#pragma once

#include <string>
#include <vector>

namespace dipasm {

/// A sequence handed to scaffolding: contig, diplotig, isotig or scaffold.
struct SeqObject {
  std::string name;
  std::string seq;
  double depth = 0;
  std::vector<std::string> parts;  // constituent piece names, for provenance

  std::size_t length() const { return seq.size(); }
};

}  // namespace dipasm
