#pragma once

// CoNLL-U reading and writing: 10 tab-separated columns, blank line between
// sentences, '#' comment lines. Multiword ranges (1-2) and empty nodes (1.1)
// are skipped on input.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ordlin {

/// HEAD value of a token whose HEAD column is "_".
inline constexpr int kNoHead = -1;

struct ConlluToken {
  int id = 0;
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;
  std::string deprel = "_";
  std::string deps = "_";
  std::string misc = "_";
  bool operator==(const ConlluToken&) const = default;
};

struct ConlluSentence {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<ConlluToken> tokens;
  bool operator==(const ConlluSentence&) const = default;
};

/// Throws DataError("<source>:<line>: ...") on a malformed line. With
/// heads_required false, a "_" HEAD reads as kNoHead (unparsed input).
std::vector<ConlluSentence> read_conllu(std::istream& in, const std::string& source = "<input>",
                                        bool heads_required = true);
std::vector<ConlluSentence> read_conllu_file(const std::string& path, bool heads_required = true);

void write_conllu(std::ostream& out, std::span<const ConlluSentence> sentences);
void write_conllu_file(const std::string& path, std::span<const ConlluSentence> sentences);

}  // namespace ordlin
