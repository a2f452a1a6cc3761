//===- lexer.cpp - textual IR tokenizer -------------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "lexer.hpp"

#include <cctype>

namespace halogen::ir {

namespace {

bool isIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool isIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         c == '.';
}

} // namespace

Lexer::Lexer(std::string source, std::string filename)
    : src(std::move(source)), file(std::move(filename)) {}

SrcLoc Lexer::locAt(size_t offset) const {
  SrcLoc loc;
  loc.file = file;
  loc.line = 1;
  loc.col = 1;
  for (size_t i = 0; i < offset && i < src.size(); ++i) {
    if (src[i] == '\n') {
      ++loc.line;
      loc.col = 1;
    } else {
      ++loc.col;
    }
  }
  return loc;
}

SrcLoc Lexer::here() {
  if (hasLookahead)
    return lookahead.loc;
  skipTrivia();
  return locAt(pos);
}

const Token &Lexer::peek() {
  if (!hasLookahead) {
    lookahead = lexOne();
    hasLookahead = true;
  }
  return lookahead;
}

Token Lexer::next() {
  if (hasLookahead) {
    hasLookahead = false;
    return lookahead;
  }
  return lexOne();
}

void Lexer::skipTrivia() {
  while (pos < src.size()) {
    char c = src[pos];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
      while (pos < src.size() && src[pos] != '\n')
        ++pos;
    } else {
      break;
    }
  }
}

std::string Lexer::captureAngles() {
  // Lookahead must not straddle the payload.
  if (hasLookahead)
    return {};
  int depth = 1;
  std::string out;
  while (pos < src.size()) {
    char c = src[pos++];
    if (c == '<') {
      ++depth;
    } else if (c == '>') {
      if (--depth == 0)
        return out;
    }
    out.push_back(c);
  }
  return out;
}

Token Lexer::lexOne() {
  skipTrivia();
  Token t;
  t.loc = locAt(pos);
  if (pos >= src.size()) {
    t.kind = Tok::Eof;
    return t;
  }
  char c = src[pos];

  auto simple = [&](Tok k) {
    t.kind = k;
    t.text = std::string(1, src[pos]);
    ++pos;
    return t;
  };

  switch (c) {
  case '(':
    return simple(Tok::LParen);
  case ')':
    return simple(Tok::RParen);
  case '{':
    return simple(Tok::LBrace);
  case '}':
    return simple(Tok::RBrace);
  case '[':
    return simple(Tok::LBracket);
  case ']':
    return simple(Tok::RBracket);
  case '<':
    return simple(Tok::Less);
  case '>':
    return simple(Tok::Greater);
  case ',':
    return simple(Tok::Comma);
  case ':':
    return simple(Tok::Colon);
  case '=':
    return simple(Tok::Equal);
  case '^':
    return simple(Tok::Caret);
  case '?':
    return simple(Tok::Question);
  default:
    break;
  }

  if (c == '-') {
    if (pos + 1 < src.size() && src[pos + 1] == '>') {
      pos += 2;
      t.kind = Tok::Arrow;
      t.text = "->";
      return t;
    }
    if (pos + 1 < src.size() &&
        (std::isdigit(static_cast<unsigned char>(src[pos + 1])) ||
         src.compare(pos + 1, 3, "inf") == 0 ||
         src.compare(pos + 1, 3, "nan") == 0)) {
      // Falls through to the numeric scanner below.
    } else {
      t.kind = Tok::Error;
      t.text = "unexpected character '-'";
      return t;
    }
  }

  if (c == '%' || c == '@' || c == '#' || c == '!') {
    ++pos;
    std::string name;
    // Value ids may be purely numeric (%0); the rest need an identifier.
    while (pos < src.size() && isIdentChar(src[pos]))
      name.push_back(src[pos++]);
    if (name.empty()) {
      t.kind = Tok::Error;
      t.text = std::string("expected identifier after '") + c + "'";
      return t;
    }
    t.text = name;
    t.kind = c == '%'   ? Tok::ValueId
             : c == '@' ? Tok::SymbolId
             : c == '#' ? Tok::AttrId
                        : Tok::TypeId;
    return t;
  }

  if (c == '"') {
    ++pos;
    std::string value;
    while (pos < src.size() && src[pos] != '"') {
      char ch = src[pos++];
      if (ch == '\\' && pos < src.size()) {
        char esc = src[pos++];
        switch (esc) {
        case 'n':
          value.push_back('\n');
          break;
        case 't':
          value.push_back('\t');
          break;
        case '"':
          value.push_back('"');
          break;
        case '\\':
          value.push_back('\\');
          break;
        default:
          value.push_back(esc);
        }
      } else {
        value.push_back(ch);
      }
    }
    if (pos >= src.size()) {
      t.kind = Tok::Error;
      t.text = "unterminated string literal";
      return t;
    }
    ++pos; // closing quote
    t.kind = Tok::String;
    t.text = value;
    return t;
  }

  if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
    std::string text;
    if (c == '-') {
      text.push_back('-');
      ++pos;
    }
    if (src.compare(pos, 3, "inf") == 0 || src.compare(pos, 3, "nan") == 0) {
      text += src.substr(pos, 3);
      pos += 3;
      t.kind = Tok::Numeric;
      t.text = text;
      return t;
    }
    bool isHex = src.compare(pos, 2, "0x") == 0 || src.compare(pos, 2, "0X") == 0;
    if (isHex) {
      text += src.substr(pos, 2);
      pos += 2;
      while (pos < src.size() &&
             std::isxdigit(static_cast<unsigned char>(src[pos])))
        text.push_back(src[pos++]);
    } else {
      while (pos < src.size()) {
        char d = src[pos];
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
          text.push_back(d);
          ++pos;
        } else if (d == 'e' || d == 'E') {
          // Exponent only when followed by digits or a signed exponent.
          if (pos + 1 < src.size() &&
              (std::isdigit(static_cast<unsigned char>(src[pos + 1])) ||
               ((src[pos + 1] == '+' || src[pos + 1] == '-') &&
                pos + 2 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[pos + 2]))))) {
            text.push_back(d);
            ++pos;
            if (src[pos] == '+' || src[pos] == '-')
              text.push_back(src[pos++]);
          } else {
            break;
          }
        } else {
          break;
        }
      }
    }
    t.kind = Tok::Numeric;
    t.text = text;
    return t;
  }

  if (isIdentStart(c)) {
    std::string name;
    while (pos < src.size() && isIdentChar(src[pos]))
      name.push_back(src[pos++]);
    t.kind = Tok::BareId;
    t.text = name;
    return t;
  }

  t.kind = Tok::Error;
  t.text = std::string("unexpected character '") + c + "'";
  ++pos;
  return t;
}

} // namespace halogen::ir
