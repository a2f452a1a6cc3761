//===- lexer.hpp - textual IR tokenizer ------------------------*- C++ -*-===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef HALOGEN_SRC_IR_LEXER_HPP
#define HALOGEN_SRC_IR_LEXER_HPP

#include "halogen/ir/diagnostics.hpp"

#include <string>

namespace halogen::ir {

enum class Tok {
  Eof,
  BareId,   // func.func, memref, step
  Numeric,  // 42, -1, 0x44000000, 1.5, -2.75e10, inf, -nan
  String,   // "..." with escapes resolved
  ValueId,  // %0, %arg
  SymbolId, // @step
  AttrId,   // #dmp.grid  (text holds "dmp.grid")
  TypeId,   // !stencil.field / !field (text holds the dotted name)
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Less,
  Greater,
  Comma,
  Colon,
  Equal,
  Arrow,
  Caret,
  Question,
  Error,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  SrcLoc loc;
};

/// Pull lexer with single-token lookahead. Comments run from "//" to end of
/// line. The parser can drop to raw character scanning for shaped type
/// payloads (memref<108x108xf32>) where 'x' acts as a separator.
class Lexer {
public:
  Lexer(std::string source, std::string filename);

  const Token &peek();
  Token next();
  SrcLoc here();

  /// With the '<' already consumed, return the raw text up to the matching
  /// '>' (nesting-aware) and move past it. Requires no pending lookahead.
  std::string captureAngles();

private:
  Token lexOne();
  void skipTrivia();
  SrcLoc locAt(size_t offset) const;

  std::string src;
  std::string file;
  size_t pos = 0;
  Token lookahead;
  bool hasLookahead = false;
};

} // namespace halogen::ir

#endif // HALOGEN_SRC_IR_LEXER_HPP
