from enum import Enum
from dataclasses import dataclass
from typing import List, Optional

class TokenType(Enum):
    # Literals
    NUMBER = "NUMBER"
    IDENTIFIER = "IDENTIFIER"

    # Keywords
    STOP = "stop"
    IF = "if"
    THEN = "then"
    ELSE = "else"
    NEW = "new"
    TRACE = "trace"
    SYNC = "sync"
    GETI = "getI"
    SETI = "setI"
    GO = "go"
    OK = "ok"
    FAIL = "fail"
    SUM = "sum"
    IN = "in"

    # Operators
    BANG = "!"
    QUESTION = "?"
    QUERY = "?*"
    BAR = "|"
    EQ = "="
    AT = "@"
    PLUS = "+"
    STAR = "*"

    # Delimiters
    LBLOCK = "[["
    RBLOCK = "]]"
    LANGLE = "<"
    RANGLE = ">"
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    DOT = "."

    # Special
    EOF = "EOF"

@dataclass
class Token:
    type: TokenType
    value: str
    line: int
    column: int

class LexerError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column

KEYWORDS = {
    'stop', 'if', 'then', 'else', 'new', 'trace', 'sync', 'getI', 'setI',
    'go', 'ok', 'fail', 'sum', 'in'
}

TWO_CHAR_TOKENS = {
    '[[': TokenType.LBLOCK,
    ']]': TokenType.RBLOCK,
    '?*': TokenType.QUERY,
}

SINGLE_CHAR_TOKENS = {
    '!': TokenType.BANG,
    '?': TokenType.QUESTION,
    '|': TokenType.BAR,
    '=': TokenType.EQ,
    '@': TokenType.AT,
    '+': TokenType.PLUS,
    '*': TokenType.STAR,
    '<': TokenType.LANGLE,
    '>': TokenType.RANGLE,
    '(': TokenType.LPAREN,
    ')': TokenType.RPAREN,
    '{': TokenType.LBRACE,
    '}': TokenType.RBRACE,
    ',': TokenType.COMMA,
    '.': TokenType.DOT,
}

class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1

    def current_char(self) -> Optional[str]:
        return self.text[self.pos] if self.pos < len(self.text) else None

    def peek_char(self, offset: int = 1) -> Optional[str]:
        peek_pos = self.pos + offset
        return self.text[peek_pos] if peek_pos < len(self.text) else None

    def advance(self):
        if self.pos < len(self.text) and self.text[self.pos] == '\n':
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        self.pos += 1

    def skip_whitespace_and_comments(self):
        while self.current_char() is not None:
            char = self.current_char()
            if char in ' \t\r\n':
                self.advance()
            elif char == '#':
                while self.current_char() is not None and self.current_char() != '\n':
                    self.advance()
            else:
                break

    def read_number(self) -> Token:
        start_pos = self.pos
        start_col = self.column
        start_line = self.line

        while self.current_char() and self.current_char().isdigit():
            self.advance()

        value = self.text[start_pos:self.pos]
        return Token(TokenType.NUMBER, value, start_line, start_col)

    def read_identifier(self) -> Token:
        start_pos = self.pos
        start_col = self.column
        start_line = self.line

        while (self.current_char() and
               (self.current_char().isalnum() or self.current_char() in "_'")):
            self.advance()

        value = self.text[start_pos:self.pos]
        token_type = TokenType.IDENTIFIER

        if value in KEYWORDS:
            token_type = TokenType(value)

        return Token(token_type, value, start_line, start_col)

    def tokenize(self) -> List[Token]:
        tokens = []

        while True:
            self.skip_whitespace_and_comments()
            char = self.current_char()
            if char is None:
                break

            if char.isdigit():
                tokens.append(self.read_number())
                continue

            if char.isalpha() or char == '_':
                tokens.append(self.read_identifier())
                continue

            pair = char + (self.peek_char() or '')
            if pair in TWO_CHAR_TOKENS:
                tokens.append(Token(TWO_CHAR_TOKENS[pair], pair, self.line, self.column))
                self.advance()
                self.advance()
                continue

            if char in SINGLE_CHAR_TOKENS:
                tokens.append(Token(SINGLE_CHAR_TOKENS[char], char, self.line, self.column))
                self.advance()
                continue

            raise LexerError(f"Unexpected character {char!r}", self.line, self.column)

        tokens.append(Token(TokenType.EOF, "", self.line, self.column))
        return tokens
