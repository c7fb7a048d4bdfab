#pragma once

// Small generated treebank with English-like clause structure, for training
// runs when no real treebank is at hand. Attachments follow from the word
// classes (for example "of"/"with" phrases modify nouns, "in"/"on"/"to"
// phrases modify verbs), so heads are learnable from the words alone.

#include <cstdint>
#include <vector>

#include "ordlin/conllu.hpp"

namespace ordlin {

std::vector<ConlluSentence> synthetic_treebank(int count, std::uint64_t seed);

}  // namespace ordlin
