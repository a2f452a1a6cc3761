//===- parser.cpp - textual IR parser ---------------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Recursive-descent parser for the textual IR. Grammar sketch:
//
//   module    ::= op* | "builtin.module" ("attributes" attr-dict)? region
//   op        ::= (results "=")? (generic-op | pretty-op)
//   generic   ::= ("\"name\"" | name) "(" use-list ")" attr-dict?
//                 region-list? attr-dict? ":" fn-type
//   region    ::= "{" ("^" id? "(" typed-args ")" ":")? op* "}"
//
// Values live in lexical scopes; func bodies are isolated from above.
// Shadowing and redefinition are rejected. Regions are single blocks; a
// second block header is a parse error.
//
//===----------------------------------------------------------------------===//

#include "halogen/ir/parser.hpp"
#include "halogen/ir/dialect.hpp"
#include "lexer.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>

namespace halogen::ir {

namespace {

struct ParseFail {};

class Parser {
public:
  Parser(const std::string &text, const std::string &filename)
      : lex(text, filename) {}

  Expected<ModuleOp> run() {
    ensureDialectsRegistered();
    try {
      ModuleOp m = parseModuleTop();
      return Expected<ModuleOp>::success(std::move(m));
    } catch (ParseFail &) {
      return Expected<ModuleOp>::failure(std::move(diags));
    }
  }

  Expected<TypeDesc> runType() {
    ensureDialectsRegistered();
    try {
      TypeDesc t = parseType();
      return Expected<TypeDesc>::success(std::move(t));
    } catch (ParseFail &) {
      return Expected<TypeDesc>::failure(std::move(diags));
    }
  }

private:
  Lexer lex;
  std::vector<Diagnostic> diags;

  struct Scope {
    std::map<std::string, Value *> values;
    bool isolated = false;
  };
  std::vector<Scope> scopes;

  //===------------------------------------------------------------------===//
  // Token plumbing
  //===------------------------------------------------------------------===//

  [[noreturn]] void error(const SrcLoc &loc, const std::string &msg) {
    diags.push_back(Diagnostic{loc, msg, ""});
    throw ParseFail{};
  }

  Token expect(Tok kind, const char *what) {
    Token t = lex.next();
    if (t.kind == Tok::Error)
      error(t.loc, t.text);
    if (t.kind != kind)
      error(t.loc, std::string("expected ") + what + ", found '" +
                       (t.kind == Tok::Eof ? "<eof>" : t.text) + "'");
    return t;
  }

  bool peekIs(Tok kind) { return lex.peek().kind == kind; }

  bool accept(Tok kind) {
    if (peekIs(kind)) {
      lex.next();
      return true;
    }
    return false;
  }

  bool acceptKeyword(const char *kw) {
    if (peekIs(Tok::BareId) && lex.peek().text == kw) {
      lex.next();
      return true;
    }
    return false;
  }

  void expectKeyword(const char *kw) {
    Token t = lex.next();
    if (t.kind != Tok::BareId || t.text != kw)
      error(t.loc, std::string("expected '") + kw + "'");
  }

  std::int64_t parseIntToken() {
    Token t = expect(Tok::Numeric, "integer");
    return intFromToken(t);
  }

  std::int64_t intFromToken(const Token &t) {
    const char *begin = t.text.c_str();
    char *end = nullptr;
    long long v = std::strtoll(begin, &end, 0);
    if (end != begin + t.text.size())
      error(t.loc, "malformed integer literal '" + t.text + "'");
    return v;
  }

  //===------------------------------------------------------------------===//
  // Scopes
  //===------------------------------------------------------------------===//

  Value *resolve(const std::string &name, const SrcLoc &loc) {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      auto found = it->values.find(name);
      if (found != it->values.end())
        return found->second;
      if (it->isolated)
        break;
    }
    error(loc, "undefined value %" + name);
  }

  void define(const std::string &name, Value *v, const SrcLoc &loc) {
    if (scopes.back().values.count(name))
      error(loc, "redefinition of %" + name);
    // Shadowing outer definitions is rejected outright; isolation
    // boundaries make the outer name invisible, so those do not count.
    for (auto it = std::next(scopes.rbegin()); it != scopes.rend(); ++it) {
      if (std::prev(it.base())->isolated)
        break;
      if (it->values.count(name))
        error(loc, "%" + name + " shadows a value from an enclosing region");
      if (it->isolated)
        break;
    }
    scopes.back().values[name] = v;
  }

  Value *useValue(const TypeDesc &expected, bool checkType = true) {
    Token t = expect(Tok::ValueId, "value use");
    Value *v = resolve(t.text, t.loc);
    if (checkType && !(v->type == expected))
      error(t.loc, "operand %" + t.text + " has type " + v->type.str() +
                       ", expected " + expected.str());
    return v;
  }

  //===------------------------------------------------------------------===//
  // Types
  //===------------------------------------------------------------------===//

  std::optional<Scalar> scalarByName(const std::string &s) {
    if (s == "i1")
      return Scalar::I1;
    if (s == "i32")
      return Scalar::I32;
    if (s == "i64")
      return Scalar::I64;
    if (s == "f32")
      return Scalar::F32;
    if (s == "f64")
      return Scalar::F64;
    if (s == "index")
      return Scalar::Index;
    return std::nullopt;
  }

  /// Split a shaped payload "108x108xf32" / "[-1,129]x[0,5]xf64" / "?xf64"
  /// into dimension substrings plus a trailing element type.
  TypeDesc parseShapedPayload(const std::string &payload, const SrcLoc &loc,
                              const std::string &kind) {
    size_t p = 0;
    auto fail = [&]() -> void {
      error(loc, "malformed " + kind + " payload '" + payload + "'");
    };
    std::vector<std::int64_t> shape;
    std::vector<Interval> bounds;
    bool deferred = false;
    while (p < payload.size()) {
      char c = payload[p];
      if (c == '?') {
        deferred = true;
        ++p;
      } else if (c == '[') {
        size_t close = payload.find(']', p);
        if (close == std::string::npos)
          fail();
        std::string body = payload.substr(p + 1, close - p - 1);
        size_t comma = body.find(',');
        if (comma == std::string::npos)
          fail();
        Interval iv;
        iv.lb = std::strtoll(body.substr(0, comma).c_str(), nullptr, 10);
        iv.ub = std::strtoll(body.substr(comma + 1).c_str(), nullptr, 10);
        bounds.push_back(iv);
        p = close + 1;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t q = p;
        while (q < payload.size() &&
               std::isdigit(static_cast<unsigned char>(payload[q])))
          ++q;
        shape.push_back(std::strtoll(payload.substr(p, q - p).c_str(),
                                     nullptr, 10));
        p = q;
      } else {
        // Remaining text is the element type.
        auto elem = scalarByName(payload.substr(p));
        if (!elem)
          fail();
        if (kind == "memref") {
          if (!bounds.empty() || deferred)
            fail();
          return TypeDesc(BufferType{*elem, shape});
        }
        if (kind == "field") {
          if (bounds.empty() || deferred || !shape.empty())
            fail();
          return TypeDesc(FieldType{*elem, Bounds{bounds}});
        }
        // temp
        if (!shape.empty())
          fail();
        TempType t;
        t.elem = *elem;
        if (!deferred)
          t.bounds = Bounds{bounds};
        else if (!bounds.empty())
          fail();
        return TypeDesc(t);
      }
      if (p < payload.size()) {
        if (payload[p] != 'x')
          fail();
        ++p;
      }
    }
    fail();
    throw ParseFail{}; // unreachable
  }

  TypeDesc parseType() {
    const Token &ahead = lex.peek();
    SrcLoc loc = ahead.loc;
    if (ahead.kind == Tok::LParen)
      return TypeDesc(parseFuncType());
    if (ahead.kind == Tok::BareId) {
      Token t = lex.next();
      if (auto s = scalarByName(t.text))
        return TypeDesc(*s);
      if (t.text == "memref") {
        expect(Tok::Less, "'<'");
        return parseShapedPayload(lex.captureAngles(), loc, "memref");
      }
      error(t.loc, "unknown type '" + t.text + "'");
    }
    if (ahead.kind == Tok::TypeId) {
      Token t = lex.next();
      std::string name = t.text;
      if (name == "field" || name == "stencil.field") {
        expect(Tok::Less, "'<'");
        return parseShapedPayload(lex.captureAngles(), loc, "field");
      }
      if (name == "temp" || name == "stencil.temp") {
        expect(Tok::Less, "'<'");
        return parseShapedPayload(lex.captureAngles(), loc, "temp");
      }
      if (name == "mpi.request")
        return TypeDesc(MpiType{MpiKind::Request});
      if (name == "mpi.status")
        return TypeDesc(MpiType{MpiKind::Status});
      if (name == "mpi.datatype")
        return TypeDesc(MpiType{MpiKind::Datatype});
      if (name == "llvm.ptr")
        return TypeDesc(PtrType{});
      error(t.loc, "unknown type '!" + name + "'");
    }
    error(loc, "expected type");
  }

  FuncType parseFuncType() {
    FuncType fn;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      do {
        fn.ins.push_back(parseType());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    expect(Tok::Arrow, "'->'");
    fn.outs = parseTypeListOrSingle();
    return fn;
  }

  std::vector<TypeDesc> parseTypeListOrSingle() {
    std::vector<TypeDesc> outs;
    if (accept(Tok::LParen)) {
      if (!accept(Tok::RParen)) {
        do {
          outs.push_back(parseType());
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "')'");
      }
      return outs;
    }
    outs.push_back(parseType());
    return outs;
  }

  //===------------------------------------------------------------------===//
  // Attributes
  //===------------------------------------------------------------------===//

  Attribute parseAttribute() {
    const Token &ahead = lex.peek();
    switch (ahead.kind) {
    case Tok::Numeric: {
      Token t = lex.next();
      bool floatLexeme =
          t.text.find_first_of(".eEnif") != std::string::npos &&
          t.text.compare(0, 2, "0x") != 0;
      Scalar type = Scalar::Index;
      bool sawType = false;
      if (peekIs(Tok::Colon)) {
        lex.next();
        Token ty = expect(Tok::BareId, "scalar type");
        auto s = scalarByName(ty.text);
        if (!s)
          error(ty.loc, "unknown scalar type '" + ty.text + "'");
        type = *s;
        sawType = true;
      }
      if (isFloatScalar(type) || (floatLexeme && !sawType)) {
        if (!sawType)
          type = Scalar::F64;
        if (!isFloatScalar(type))
          error(t.loc, "float literal with integer type");
        return Attribute(floatAttrFromToken(t, type));
      }
      return Attribute(IntAttr{intFromToken(t), type});
    }
    case Tok::String: {
      Token t = lex.next();
      return Attribute(StringAttr{t.text});
    }
    case Tok::LBracket: {
      lex.next();
      ArrayAttr arr;
      if (!accept(Tok::RBracket)) {
        do {
          arr.elems.push_back(parseAttribute());
        } while (accept(Tok::Comma));
        expect(Tok::RBracket, "']'");
      }
      return Attribute(std::move(arr));
    }
    case Tok::AttrId: {
      Token t = lex.next();
      return parseDialectAttr(t);
    }
    case Tok::BareId:
    case Tok::TypeId:
    case Tok::LParen:
      return Attribute(TypeAttr{parseType()});
    default:
      error(ahead.loc, "expected attribute value");
    }
  }

  FloatAttr floatAttrFromToken(const Token &t, Scalar type) {
    if (type == Scalar::F32) {
      float v = 0;
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (r.ec != std::errc{})
        error(t.loc, "malformed float literal '" + t.text + "'");
      return FloatAttr::fromFloat(v);
    }
    double v = 0;
    auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (r.ec != std::errc{})
      error(t.loc, "malformed float literal '" + t.text + "'");
    return FloatAttr::fromDouble(v);
  }

  Attribute parseDialectAttr(const Token &nameTok) {
    const std::string &name = nameTok.text;
    if (name == "dmp.grid") {
      expect(Tok::Less, "'<'");
      std::string payload = lex.captureAngles();
      GridAttr g;
      size_t p = 0;
      while (p < payload.size()) {
        size_t q = p;
        while (q < payload.size() &&
               std::isdigit(static_cast<unsigned char>(payload[q])))
          ++q;
        if (q == p)
          error(nameTok.loc, "malformed grid payload '" + payload + "'");
        g.dims.push_back(std::strtoll(payload.substr(p, q - p).c_str(),
                                      nullptr, 10));
        p = q;
        if (p < payload.size()) {
          if (payload[p] != 'x')
            error(nameTok.loc, "malformed grid payload '" + payload + "'");
          ++p;
        }
      }
      if (g.dims.empty())
        error(nameTok.loc, "empty grid payload");
      return Attribute(g);
    }
    if (name == "dmp.exchange") {
      expect(Tok::Less, "'<'");
      ExchangeAttr e;
      expectKeyword("at");
      e.at = parseBracketedInts();
      expectKeyword("size");
      e.size = parseBracketedInts();
      expectKeyword("source");
      expectKeyword("offset");
      e.offset = parseBracketedInts();
      expectKeyword("to");
      e.to = parseBracketedInts();
      expect(Tok::Greater, "'>'");
      return Attribute(e);
    }
    error(nameTok.loc, "unknown attribute '#" + name + "'");
  }

  std::vector<std::int64_t> parseBracketedInts() {
    std::vector<std::int64_t> out;
    expect(Tok::LBracket, "'['");
    if (!accept(Tok::RBracket)) {
      do {
        out.push_back(parseIntToken());
      } while (accept(Tok::Comma));
      expect(Tok::RBracket, "']'");
    }
    return out;
  }

  void parseAttrDict(Operation &op) {
    expect(Tok::LBrace, "'{'");
    if (accept(Tok::RBrace))
      return;
    do {
      Token key = lex.next();
      if (key.kind != Tok::BareId && key.kind != Tok::String)
        error(key.loc, "expected attribute name");
      expect(Tok::Equal, "'='");
      op.setAttr(key.text, parseAttribute());
    } while (accept(Tok::Comma));
    expect(Tok::RBrace, "'}'");
  }

  //===------------------------------------------------------------------===//
  // Operations
  //===------------------------------------------------------------------===//

  ModuleOp parseModuleTop() {
    ModuleOp m = makeModule();
    scopes.push_back(Scope{{}, true});
    if (peekIs(Tok::BareId) && lex.peek().text == "builtin.module") {
      lex.next();
      if (acceptKeyword("attributes"))
        parseAttrDict(*m);
      parseRegionBody(moduleBody(*m), /*isolated=*/true);
      Token t = lex.next();
      if (t.kind != Tok::Eof)
        error(t.loc, "expected end of input after module");
    } else {
      // Implicit module: bare op list.
      while (!peekIs(Tok::Eof)) {
        if (peekIs(Tok::Error)) {
          Token t = lex.next();
          error(t.loc, t.text);
        }
        moduleBody(*m).push(parseOperation());
      }
    }
    scopes.pop_back();
    return m;
  }

  /// Region with a brace-delimited body. Pre-bound args (pretty forms) are
  /// already defined by the caller inside a scope it pushed.
  void parseRegionBody(Region &region, bool isolated,
                       bool scopeAlreadyPushed = false) {
    expect(Tok::LBrace, "'{'");
    if (!scopeAlreadyPushed)
      scopes.push_back(Scope{{}, isolated});
    // Optional single entry-block header: ^name(args):
    if (peekIs(Tok::Caret)) {
      lex.next();
      if (peekIs(Tok::BareId) || peekIs(Tok::Numeric))
        lex.next(); // block label, ignored
      if (accept(Tok::LParen)) {
        if (!accept(Tok::RParen)) {
          do {
            Token v = expect(Tok::ValueId, "block argument");
            expect(Tok::Colon, "':'");
            TypeDesc t = parseType();
            Value *arg = region.addArg(t);
            define(v.text, arg, v.loc);
          } while (accept(Tok::Comma));
          expect(Tok::RParen, "')'");
        }
      }
      expect(Tok::Colon, "':'");
    }
    while (!peekIs(Tok::RBrace)) {
      if (peekIs(Tok::Caret)) {
        Token t = lex.next();
        error(t.loc, "multi-block regions are not supported");
      }
      if (peekIs(Tok::Eof)) {
        Token t = lex.next();
        error(t.loc, "unterminated region, expected '}'");
      }
      region.push(parseOperation());
    }
    lex.next(); // consume '}'
    if (!scopeAlreadyPushed)
      scopes.pop_back();
  }

  std::unique_ptr<Operation> parseOperation() {
    // Optional result list.
    std::vector<Token> resultNames;
    if (peekIs(Tok::ValueId)) {
      do {
        resultNames.push_back(expect(Tok::ValueId, "result name"));
      } while (accept(Tok::Comma));
      expect(Tok::Equal, "'='");
    }

    Token nameTok = lex.next();
    std::string opName;
    bool generic = false;
    if (nameTok.kind == Tok::String) {
      opName = nameTok.text;
      generic = true;
    } else if (nameTok.kind == Tok::BareId) {
      opName = nameTok.text;
    } else {
      error(nameTok.loc, "expected operation name");
    }

    size_t dot = opName.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == opName.size())
      error(nameTok.loc, "operation name must be 'dialect.op', got '" +
                             opName + "'");
    if (!DialectRegistry::get().knownDialect(opName.substr(0, dot)))
      error(nameTok.loc, "unknown dialect '" + opName.substr(0, dot) + "'");

    auto op = std::make_unique<Operation>(opName);
    op->loc = nameTok.loc;

    if (!generic && parsePrettyOp(*op))
      ; // handled
    else
      parseGenericTail(*op);

    if (resultNames.size() != op->results.size())
      error(nameTok.loc, opName + " produces " +
                             std::to_string(op->results.size()) +
                             " results, but " +
                             std::to_string(resultNames.size()) +
                             " names were bound");
    for (size_t i = 0; i < resultNames.size(); ++i)
      define(resultNames[i].text, &op->results[i], resultNames[i].loc);
    return op;
  }

  /// Generic tail: "(" uses ")" attr-dict? region-list? attr-dict? ":" type.
  void parseGenericTail(Operation &op) {
    std::vector<Token> uses;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      do {
        uses.push_back(expect(Tok::ValueId, "operand"));
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    bool sawAttrs = false;
    if (peekIs(Tok::LBrace)) {
      parseAttrDict(op);
      sawAttrs = true;
    }
    if (accept(Tok::LParen)) {
      do {
        parseRegionBody(op.addRegion(), /*isolated=*/false);
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    if (!sawAttrs && peekIs(Tok::LBrace))
      parseAttrDict(op);
    expect(Tok::Colon, "':'");
    SrcLoc sigLoc = lex.here();
    FuncType sig = parseFuncType();
    if (sig.ins.size() != uses.size())
      error(sigLoc, "signature lists " + std::to_string(sig.ins.size()) +
                        " operand types, but " + std::to_string(uses.size()) +
                        " operands were given");
    for (size_t i = 0; i < uses.size(); ++i) {
      Value *v = resolve(uses[i].text, uses[i].loc);
      if (!(v->type == sig.ins[i]))
        error(uses[i].loc, "operand %" + uses[i].text + " has type " +
                               v->type.str() + ", expected " +
                               sig.ins[i].str());
      op.operands.push_back(v);
    }
    for (const TypeDesc &t : sig.outs)
      op.addResult(t);
  }

  //===------------------------------------------------------------------===//
  // Pretty op forms
  //===------------------------------------------------------------------===//

  bool parsePrettyOp(Operation &op) {
    const std::string &n = op.name;
    if (n == "builtin.module") {
      if (acceptKeyword("attributes"))
        parseAttrDict(op);
      scopes.push_back(Scope{{}, true});
      parseRegionBody(op.addRegion(), true, /*scopeAlreadyPushed=*/true);
      scopes.pop_back();
      return true;
    }
    if (n == "func.func")
      return parseFuncFunc(op), true;
    if (n == "func.return" || n == "stencil.return" || n == "loop.yield")
      return parseOperandColonTypes(op), true;
    if (n == "func.call")
      return parseFuncCall(op), true;
    if (n == "arith.constant")
      return parseArithConstant(op), true;
    if (n == "arith.addf" || n == "arith.subf" || n == "arith.mulf" ||
        n == "arith.divf" || n == "arith.addi" || n == "arith.subi" ||
        n == "arith.muli" || n == "arith.divi" || n == "arith.remi" ||
        n == "arith.andi" || n == "arith.ori")
      return parseArithBinary(op), true;
    if (n == "arith.cmp")
      return parseArithCmp(op), true;
    if (n == "arith.select")
      return parseArithSelect(op), true;
    if (n == "loop.for")
      return parseLoopFor(op), true;
    if (n == "memref.alloc")
      return parseMemrefAlloc(op), true;
    if (n == "memref.load")
      return parseMemrefLoad(op), true;
    if (n == "memref.store")
      return parseMemrefStore(op), true;
    if (n == "memref.dealloc")
      return parseUnaryColonType(op, 0), true;
    if (n == "memref.extract_base_pointer")
      return parseUnaryArrowResult(op, TypeDesc(Scalar::Index)), true;
    if (n == "llvm.int_to_ptr")
      return parseUnaryArrowResult(op, TypeDesc(PtrType{})), true;
    if (n == "stencil.load")
      return parseStencilLoad(op), true;
    if (n == "stencil.apply")
      return parseStencilApply(op), true;
    if (n == "stencil.access")
      return parseStencilAccess(op), true;
    if (n == "stencil.store")
      return parseStencilStore(op), true;
    if (n == "mpi.unwrap_memref")
      return parseMpiUnwrap(op), true;
    if (n == "mpi.comm_rank" || n == "mpi.comm_size")
      return parseNullaryColonResult(op), true;
    if (n == "mpi.init" || n == "mpi.finalize")
      return true; // bare
    return false;
  }

  void parseFuncFunc(Operation &op) {
    Token sym = expect(Tok::SymbolId, "function symbol");
    op.setAttr("sym_name", Attribute::makeString(sym.text));
    FuncType sig;
    std::vector<Token> argNames;
    bool named = false;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      named = peekIs(Tok::ValueId);
      do {
        if (named) {
          argNames.push_back(expect(Tok::ValueId, "argument name"));
          expect(Tok::Colon, "':'");
        }
        sig.ins.push_back(parseType());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    if (accept(Tok::Arrow))
      sig.outs = parseTypeListOrSingle();
    if (acceptKeyword("attributes"))
      parseAttrDict(op);
    bool hasBody = peekIs(Tok::LBrace);
    if (hasBody && !named && !sig.ins.empty())
      error(op.loc, "function definitions need named arguments");
    op.setAttr("function_type", Attribute(TypeAttr{TypeDesc(sig)}));
    if (!hasBody)
      return; // external declaration: no region
    Region &body = op.addRegion();
    scopes.push_back(Scope{{}, true});
    for (size_t i = 0; i < sig.ins.size(); ++i) {
      Value *arg = body.addArg(sig.ins[i]);
      define(argNames[i].text, arg, argNames[i].loc);
    }
    parseRegionBody(body, true, /*scopeAlreadyPushed=*/true);
    scopes.pop_back();
  }

  /// `op` / `op %a, %b : T1, T2`
  void parseOperandColonTypes(Operation &op) {
    if (!peekIs(Tok::ValueId))
      return;
    std::vector<Token> uses;
    do {
      uses.push_back(expect(Tok::ValueId, "operand"));
    } while (accept(Tok::Comma));
    expect(Tok::Colon, "':'");
    for (size_t i = 0; i < uses.size(); ++i) {
      if (i)
        expect(Tok::Comma, "','");
      TypeDesc t = parseType();
      Value *v = resolve(uses[i].text, uses[i].loc);
      if (!(v->type == t))
        error(uses[i].loc, "operand %" + uses[i].text + " has type " +
                               v->type.str() + ", expected " + t.str());
      op.operands.push_back(v);
    }
  }

  void parseFuncCall(Operation &op) {
    Token callee = expect(Tok::SymbolId, "callee symbol");
    op.setAttr("callee", Attribute::makeString(callee.text));
    std::vector<Token> uses;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      do {
        uses.push_back(expect(Tok::ValueId, "operand"));
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    expect(Tok::Colon, "':'");
    SrcLoc sigLoc = lex.here();
    FuncType sig = parseFuncType();
    if (sig.ins.size() != uses.size())
      error(sigLoc, "call signature/operand count mismatch");
    for (size_t i = 0; i < uses.size(); ++i) {
      Value *v = resolve(uses[i].text, uses[i].loc);
      if (!(v->type == sig.ins[i]))
        error(uses[i].loc, "operand %" + uses[i].text + " has type " +
                               v->type.str() + ", expected " +
                               sig.ins[i].str());
      op.operands.push_back(v);
    }
    for (const TypeDesc &t : sig.outs)
      op.addResult(t);
  }

  void parseArithConstant(Operation &op) {
    Token lit = expect(Tok::Numeric, "constant literal");
    expect(Tok::Colon, "':'");
    SrcLoc tyLoc = lex.here();
    TypeDesc t = parseType();
    if (!t.isScalar())
      error(tyLoc, "arith.constant needs a scalar type");
    if (t.isFloat())
      op.setAttr("value", Attribute(floatAttrFromToken(lit, t.scalar())));
    else
      op.setAttr("value", Attribute(IntAttr{intFromToken(lit), t.scalar()}));
    op.addResult(t);
  }

  void parseArithBinary(Operation &op) {
    Token a = expect(Tok::ValueId, "operand");
    expect(Tok::Comma, "','");
    Token b = expect(Tok::ValueId, "operand");
    expect(Tok::Colon, "':'");
    TypeDesc t = parseType();
    for (const Token &u : {a, b}) {
      Value *v = resolve(u.text, u.loc);
      if (!(v->type == t))
        error(u.loc, "operand %" + u.text + " has type " + v->type.str() +
                         ", expected " + t.str());
      op.operands.push_back(v);
    }
    op.addResult(t);
  }

  void parseArithCmp(Operation &op) {
    Token pred = expect(Tok::BareId, "comparison predicate");
    op.setAttr("predicate", Attribute::makeString(pred.text));
    expect(Tok::Comma, "','");
    parseArithBinary(op);
    // Comparison yields i1, not the operand type.
    op.results.clear();
    op.addResult(TypeDesc(Scalar::I1));
  }

  void parseArithSelect(Operation &op) {
    Token c = expect(Tok::ValueId, "condition");
    expect(Tok::Comma, "','");
    Token a = expect(Tok::ValueId, "operand");
    expect(Tok::Comma, "','");
    Token b = expect(Tok::ValueId, "operand");
    expect(Tok::Colon, "':'");
    TypeDesc t = parseType();
    Value *cv = resolve(c.text, c.loc);
    if (!cv->type.isScalar(Scalar::I1))
      error(c.loc, "select condition must be i1");
    op.operands.push_back(cv);
    for (const Token &u : {a, b}) {
      Value *v = resolve(u.text, u.loc);
      if (!(v->type == t))
        error(u.loc, "operand %" + u.text + " has type " + v->type.str() +
                         ", expected " + t.str());
      op.operands.push_back(v);
    }
    op.addResult(t);
  }

  void parseLoopFor(Operation &op) {
    Token iv = expect(Tok::ValueId, "induction variable");
    expect(Tok::Equal, "'='");
    op.operands.push_back(useValue(TypeDesc(Scalar::Index)));
    expectKeyword("to");
    op.operands.push_back(useValue(TypeDesc(Scalar::Index)));
    expectKeyword("step");
    op.operands.push_back(useValue(TypeDesc(Scalar::Index)));
    std::vector<Token> iterNames;
    std::vector<TypeDesc> iterTypes;
    if (acceptKeyword("iter")) {
      expect(Tok::LParen, "'('");
      do {
        Token n = expect(Tok::ValueId, "iteration argument");
        expect(Tok::Equal, "'='");
        Token init = expect(Tok::ValueId, "initial value");
        expect(Tok::Colon, "':'");
        TypeDesc t = parseType();
        Value *v = resolve(init.text, init.loc);
        if (!(v->type == t))
          error(init.loc, "iteration init %" + init.text + " has type " +
                              v->type.str() + ", expected " + t.str());
        op.operands.push_back(v);
        iterNames.push_back(n);
        iterTypes.push_back(t);
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    Region &body = op.addRegion();
    scopes.push_back(Scope{{}, false});
    Value *ivArg = body.addArg(TypeDesc(Scalar::Index));
    define(iv.text, ivArg, iv.loc);
    for (size_t i = 0; i < iterNames.size(); ++i) {
      Value *arg = body.addArg(iterTypes[i]);
      define(iterNames[i].text, arg, iterNames[i].loc);
    }
    parseRegionBody(body, false, /*scopeAlreadyPushed=*/true);
    scopes.pop_back();
    for (const TypeDesc &t : iterTypes)
      op.addResult(t);
  }

  void parseMemrefAlloc(Operation &op) {
    expect(Tok::LParen, "'('");
    expect(Tok::RParen, "')'");
    expect(Tok::Colon, "':'");
    SrcLoc loc = lex.here();
    TypeDesc t = parseType();
    if (!t.is<BufferType>())
      error(loc, "memref.alloc result must be a memref type");
    op.addResult(t);
  }

  void parseMemrefLoad(Operation &op) {
    Token buf = expect(Tok::ValueId, "buffer");
    std::vector<Token> idx;
    expect(Tok::LBracket, "'['");
    if (!accept(Tok::RBracket)) {
      do {
        idx.push_back(expect(Tok::ValueId, "index"));
      } while (accept(Tok::Comma));
      expect(Tok::RBracket, "']'");
    }
    expect(Tok::Colon, "':'");
    SrcLoc loc = lex.here();
    TypeDesc t = parseType();
    if (!t.isBufferLike())
      error(loc, "memref.load needs a buffer-like type");
    Value *b = resolve(buf.text, buf.loc);
    if (!(b->type == t))
      error(buf.loc, "buffer type mismatch");
    op.operands.push_back(b);
    for (const Token &i : idx) {
      Value *v = resolve(i.text, i.loc);
      if (!v->type.isScalar(Scalar::Index))
        error(i.loc, "indices must be index-typed");
      op.operands.push_back(v);
    }
    op.addResult(TypeDesc(t.elemType()));
  }

  void parseMemrefStore(Operation &op) {
    Token val = expect(Tok::ValueId, "value");
    expect(Tok::Comma, "','");
    Token buf = expect(Tok::ValueId, "buffer");
    std::vector<Token> idx;
    expect(Tok::LBracket, "'['");
    if (!accept(Tok::RBracket)) {
      do {
        idx.push_back(expect(Tok::ValueId, "index"));
      } while (accept(Tok::Comma));
      expect(Tok::RBracket, "']'");
    }
    expect(Tok::Colon, "':'");
    SrcLoc loc = lex.here();
    TypeDesc t = parseType();
    if (!t.isBufferLike())
      error(loc, "memref.store needs a buffer-like type");
    Value *v = resolve(val.text, val.loc);
    if (!v->type.isScalar(t.elemType()))
      error(val.loc, "stored value type does not match element type");
    op.operands.push_back(v);
    Value *b = resolve(buf.text, buf.loc);
    if (!(b->type == t))
      error(buf.loc, "buffer type mismatch");
    op.operands.push_back(b);
    for (const Token &i : idx) {
      Value *iv = resolve(i.text, i.loc);
      if (!iv->type.isScalar(Scalar::Index))
        error(i.loc, "indices must be index-typed");
      op.operands.push_back(iv);
    }
  }

  /// `op %v : T` with no results.
  void parseUnaryColonType(Operation &op, int) {
    Token u = expect(Tok::ValueId, "operand");
    expect(Tok::Colon, "':'");
    TypeDesc t = parseType();
    Value *v = resolve(u.text, u.loc);
    if (!(v->type == t))
      error(u.loc, "operand type mismatch");
    op.operands.push_back(v);
  }

  /// `op %v : T -> R` where R is validated against `expected`.
  void parseUnaryArrowResult(Operation &op, const TypeDesc &expected) {
    Token u = expect(Tok::ValueId, "operand");
    expect(Tok::Colon, "':'");
    TypeDesc t = parseType();
    expect(Tok::Arrow, "'->'");
    SrcLoc loc = lex.here();
    TypeDesc r = parseType();
    if (!(r == expected))
      error(loc, "result must be " + expected.str());
    Value *v = resolve(u.text, u.loc);
    if (!(v->type == t))
      error(u.loc, "operand type mismatch");
    op.operands.push_back(v);
    op.addResult(r);
  }

  void parseStencilLoad(Operation &op) {
    Token u = expect(Tok::ValueId, "field");
    expect(Tok::Colon, "':'");
    TypeDesc fieldTy = parseType();
    expect(Tok::Arrow, "'->'");
    TypeDesc tempTy = parseType();
    Value *v = resolve(u.text, u.loc);
    if (!(v->type == fieldTy))
      error(u.loc, "field type mismatch");
    op.operands.push_back(v);
    op.addResult(tempTy);
  }

  void parseStencilApply(Operation &op) {
    Region &body = op.addRegion();
    std::vector<Token> argNames;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      do {
        Token n = expect(Tok::ValueId, "region argument");
        expect(Tok::Equal, "'='");
        Token init = expect(Tok::ValueId, "operand");
        expect(Tok::Colon, "':'");
        TypeDesc t = parseType();
        Value *v = resolve(init.text, init.loc);
        if (!(v->type == t))
          error(init.loc, "operand %" + init.text + " has type " +
                              v->type.str() + ", expected " + t.str());
        op.operands.push_back(v);
        argNames.push_back(n);
        body.addArg(t);
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    expect(Tok::Arrow, "'->'");
    for (const TypeDesc &t : parseTypeListOrSingle())
      op.addResult(t);
    scopes.push_back(Scope{{}, false});
    for (size_t i = 0; i < argNames.size(); ++i)
      define(argNames[i].text, &body.args[i], argNames[i].loc);
    parseRegionBody(body, false, /*scopeAlreadyPushed=*/true);
    scopes.pop_back();
  }

  void parseStencilAccess(Operation &op) {
    Token u = expect(Tok::ValueId, "temp");
    op.setAttr("offsets", Attribute::makeIndexArray(parseBracketedInts()));
    expect(Tok::Colon, "':'");
    SrcLoc loc = lex.here();
    TypeDesc t = parseType();
    if (!t.isScalar())
      error(loc, "access result must be a scalar");
    Value *v = resolve(u.text, u.loc);
    op.operands.push_back(v);
    op.addResult(t);
  }

  void parseStencilStore(Operation &op) {
    Token t = expect(Tok::ValueId, "temp");
    expectKeyword("to");
    Token f = expect(Tok::ValueId, "field");
    expect(Tok::LParen, "'('");
    std::vector<std::int64_t> lbs, ubs;
    do {
      expect(Tok::LBracket, "'['");
      lbs.push_back(parseIntToken());
      expect(Tok::Comma, "','");
      ubs.push_back(parseIntToken());
      expect(Tok::RBracket, "']'");
      if (peekIs(Tok::BareId) && lex.peek().text == "x") {
        lex.next();
        continue;
      }
      break;
    } while (true);
    expect(Tok::RParen, "')'");
    op.setAttr("lb", Attribute::makeIndexArray(lbs));
    op.setAttr("ub", Attribute::makeIndexArray(ubs));
    expect(Tok::Colon, "':'");
    TypeDesc tempTy = parseType();
    expectKeyword("to");
    TypeDesc fieldTy = parseType();
    Value *tv = resolve(t.text, t.loc);
    if (!(tv->type == tempTy))
      error(t.loc, "temp type mismatch");
    Value *fv = resolve(f.text, f.loc);
    if (!(fv->type == fieldTy))
      error(f.loc, "field type mismatch");
    op.operands.push_back(tv);
    op.operands.push_back(fv);
  }

  void parseMpiUnwrap(Operation &op) {
    Token u = expect(Tok::ValueId, "buffer");
    expect(Tok::Colon, "':'");
    TypeDesc t = parseType();
    expect(Tok::Arrow, "'->'");
    for (const TypeDesc &r : parseTypeListOrSingle())
      op.addResult(r);
    Value *v = resolve(u.text, u.loc);
    if (!(v->type == t))
      error(u.loc, "buffer type mismatch");
    op.operands.push_back(v);
  }

  /// `op : T` with one result of type T.
  void parseNullaryColonResult(Operation &op) {
    expect(Tok::Colon, "':'");
    op.addResult(parseType());
  }
};

} // namespace

Expected<ModuleOp> parseModule(const std::string &text,
                               const std::string &filename) {
  Parser p(text, filename);
  return p.run();
}

Expected<TypeDesc> parseType(const std::string &text) {
  Parser p(text, "<type>");
  return p.runType();
}

} // namespace halogen::ir
