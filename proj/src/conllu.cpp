#include "ordlin/conllu.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "ordlin/errors.hpp"

namespace ordlin {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

bool parse_int(const std::string& s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<ConlluSentence> read_conllu(std::istream& in, const std::string& source, bool heads_required) {
  std::vector<ConlluSentence> out;
  ConlluSentence current;
  std::string line;
  long lineno = 0;
  const auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  const auto flush = [&] {
    if (current.tokens.empty()) {
      if (!current.comments.empty()) fail("comment block without tokens");
      return;
    }
    const int n = static_cast<int>(current.tokens.size());
    for (const auto& t : current.tokens) {
      if (t.head > n) fail("HEAD " + std::to_string(t.head) + " of token " + std::to_string(t.id) + " exceeds sentence length");
    }
    out.push_back(std::move(current));
    current = {};
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      if (!current.tokens.empty()) fail("comment inside a sentence");
      current.comments.push_back(line.substr(1));
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 10) fail("expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    ConlluToken t;
    if (!parse_int(cols[0], t.id) || t.id < 1) fail("bad ID '" + cols[0] + "'");
    if (t.id != static_cast<int>(current.tokens.size()) + 1) {
      fail("ID " + cols[0] + " out of sequence (expected " + std::to_string(current.tokens.size() + 1) + ")");
    }
    if (!heads_required && cols[6] == "_") {
      t.head = kNoHead;
    } else if (!parse_int(cols[6], t.head) || t.head < 0) {
      fail("HEAD '" + cols[6] + "' is not a non-negative integer");
    }
    if (t.head == t.id) fail("token " + cols[0] + " is its own head");
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    current.tokens.push_back(std::move(t));
  }
  ++lineno;
  flush();
  return out;
}

std::vector<ConlluSentence> read_conllu_file(const std::string& path, bool heads_required) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_conllu(in, path, heads_required);
}

void write_conllu(std::ostream& out, std::span<const ConlluSentence> sentences) {
  for (const auto& s : sentences) {
    for (const auto& c : s.comments) out << '#' << c << '\n';
    for (const auto& t : s.tokens) {
      out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t' << t.feats
          << '\t';
      if (t.head == kNoHead) {
        out << '_';
      } else {
        out << t.head;
      }
      out << '\t' << t.deprel << '\t' << t.deps << '\t' << t.misc << '\n';
    }
    out << '\n';
  }
}

void write_conllu_file(const std::string& path, std::span<const ConlluSentence> sentences) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_conllu(out, sentences);
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace ordlin
