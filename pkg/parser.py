from dataclasses import fields
from typing import Iterable, List, Optional
from lexer import Token, TokenType, Lexer, LexerError
from ast_nodes import *
from scope_analyzer import BinderScopes, located_names, retag_locations

class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column

class Parser:
    def __init__(self, tokens: List[Token], extra_locations: Iterable[str] = ()):
        self.tokens = tokens
        self.pos = 0
        self.extra_locations = set(extra_locations)
        self.binders = BinderScopes()

    def current_token(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.tokens[-1]

    def peek_token(self, offset: int = 1) -> Token:
        peek_pos = self.pos + offset
        return self.tokens[peek_pos] if peek_pos < len(self.tokens) else self.tokens[-1]

    def advance(self):
        if self.pos < len(self.tokens) - 1:
            self.pos += 1

    def match(self, token_type: TokenType) -> bool:
        return self.current_token().type == token_type

    def consume(self, token_type: TokenType) -> Token:
        if not self.match(token_type):
            raise self.error(f"Expected {token_type.value!r}, got {self.current_token().value or 'end of input'!r}")
        token = self.current_token()
        self.advance()
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current_token()
        return ParseError(message, token.line, token.column)

    # Names

    def is_bound(self, text: str) -> bool:
        return self.binders.lookup(text) is not None

    def subject_name(self) -> Name:
        token = self.consume(TokenType.IDENTIFIER)
        if self.is_bound(token.value):
            return var(token.value)
        return chan(token.value)

    def location_name(self) -> Name:
        token = self.consume(TokenType.IDENTIFIER)
        if self.is_bound(token.value):
            return var(token.value)
        return loc(token.value)

    def value_name(self) -> Name:
        token = self.current_token()
        if token.type == TokenType.NUMBER:
            self.advance()
            return Name(NameKind.INDEX, str(int(token.value)))
        self.consume(TokenType.IDENTIFIER)
        if self.is_bound(token.value):
            return var(token.value)
        return chan(token.value)

    def parse_values(self, closing: TokenType) -> tuple:
        values = []
        if not self.match(closing):
            values.append(self.value_name())
            while self.match(TokenType.COMMA):
                self.advance()
                values.append(self.value_name())
        return tuple(values)

    def parse_params(self) -> tuple:
        self.consume(TokenType.LPAREN)
        params = []
        if not self.match(TokenType.RPAREN):
            params.append(self.consume(TokenType.IDENTIFIER).value)
            while self.match(TokenType.COMMA):
                self.advance()
                params.append(self.consume(TokenType.IDENTIFIER).value)
        self.consume(TokenType.RPAREN)
        return tuple(var(p) for p in params)

    def parse_channel_list(self) -> List[Name]:
        names = [chan(self.consume(TokenType.IDENTIFIER).value)]
        while self.match(TokenType.COMMA):
            self.advance()
            names.append(chan(self.consume(TokenType.IDENTIFIER).value))
        return names

    def with_binders(self, params, parse_body):
        self.binders.push(params)
        body = parse_body()
        self.binders.pop()
        return body

    # Systems

    def parse(self) -> Term:
        system = self.parse_system()
        self.consume(TokenType.EOF)
        locations = located_names(system) | self.extra_locations
        return retag_locations(system, locations)

    def parse_system(self) -> Term:
        left = self.parse_system_atom()
        if self.match(TokenType.BAR):
            self.advance()
            return Par(left, self.parse_system())
        return left

    def parse_system_atom(self) -> Term:
        if self.match(TokenType.NEW):
            self.advance()
            channels = self.parse_channel_list()
            self.consume(TokenType.DOT)
            body = self.parse_system_atom()
            for channel in reversed(channels):
                body = NewChan(channel, body)
            return body
        if self.match(TokenType.LPAREN):
            self.advance()
            system = self.parse_system()
            self.consume(TokenType.RPAREN)
            return system
        if self.match(TokenType.IDENTIFIER):
            return self.parse_located()
        raise self.error(f"Unexpected token {self.current_token().value or 'end of input'!r} in system")

    def parse_located(self) -> Term:
        start = self.current_token()
        location = loc(self.consume(TokenType.IDENTIFIER).value)
        self.consume(TokenType.LBLOCK)
        body = self.parse_process()
        self.consume(TokenType.RBLOCK)
        if self.match(TokenType.AT):
            body = self.parse_block_context(body)
        self.validate(body, False, start)
        return LocatedProcess(location, body)

    def parse_block_context(self, monitor: Term) -> MonitorBlock:
        self.consume(TokenType.AT)
        self.consume(TokenType.LPAREN)
        ctx_location = self.location_name()
        self.consume(TokenType.COMMA)
        ctx_index = int(self.consume(TokenType.NUMBER).value)
        self.consume(TokenType.RPAREN)
        return MonitorBlock(monitor, ctx_location, ctx_index)

    def validate(self, term: Term, in_monitor: bool, token: Token):
        if isinstance(term, MonitorBlock):
            if in_monitor:
                raise self.error("Monitor block nested inside a monitor", token)
            self.validate(term.monitor, True, token)
            return
        if isinstance(term, TraceEntity) and in_monitor:
            raise self.error("Trace entity inside a monitor block", token)
        if isinstance(term, MONITOR_ONLY) and not in_monitor:
            raise self.error(f"'{type(term).__name__}' is only allowed in monitor blocks", token)
        for f in fields(term):
            child = getattr(term, f.name)
            if isinstance(child, Term):
                self.validate(child, in_monitor, token)

    # Processes and monitors

    def parse_process(self) -> Term:
        left = self.parse_prefix()
        if self.match(TokenType.BAR):
            self.advance()
            return Par(left, self.parse_process())
        return left

    def parse_continuation(self) -> Term:
        self.consume(TokenType.DOT)
        return self.parse_prefix()

    def parse_prefix(self) -> Term:
        token = self.current_token()

        if self.match(TokenType.STOP):
            self.advance()
            return Stop()
        elif self.match(TokenType.OK):
            self.advance()
            return Ok()
        elif self.match(TokenType.FAIL):
            self.advance()
            return Fail()
        elif self.match(TokenType.BANG):
            self.advance()
            return Repeat(self.parse_prefix())
        elif self.match(TokenType.NEW):
            self.advance()
            channels = self.parse_channel_list()
            body = self.parse_continuation()
            for channel in reversed(channels):
                body = NewChan(channel, body)
            return body
        elif self.match(TokenType.IF):
            return self.parse_if()
        elif self.match(TokenType.TRACE):
            return self.parse_trace_entity()
        elif self.match(TokenType.SYNC):
            self.advance()
            location = self.location_name()
            return Sync(location, self.parse_continuation())
        elif self.match(TokenType.GO):
            self.advance()
            location = self.location_name()
            return Go(location, self.parse_continuation())
        elif self.match(TokenType.GETI):
            self.advance()
            loc_var, idx_var = self.parse_params_pair()
            body = self.with_binders((loc_var, idx_var), self.parse_continuation)
            return GetI(loc_var, idx_var, body)
        elif self.match(TokenType.SETI):
            self.advance()
            self.consume(TokenType.LPAREN)
            location = self.location_name()
            self.consume(TokenType.COMMA)
            index = self.value_name()
            self.consume(TokenType.RPAREN)
            return SetI(location, index, self.parse_continuation())
        elif self.match(TokenType.LBLOCK):
            self.advance()
            monitor = self.parse_process()
            self.consume(TokenType.RBLOCK)
            return self.parse_block_context(monitor)
        elif self.match(TokenType.LPAREN):
            self.advance()
            process = self.parse_process()
            self.consume(TokenType.RPAREN)
            return process
        elif self.match(TokenType.IDENTIFIER):
            return self.parse_action()

        raise self.error(f"Unexpected token {token.value or 'end of input'!r}")

    def parse_params_pair(self):
        start = self.current_token()
        params = self.parse_params()
        if len(params) != 2:
            raise self.error("getI binds exactly two variables", start)
        return params

    def parse_if(self) -> IfThenElse:
        self.consume(TokenType.IF)
        lhs = self.value_name()
        self.consume(TokenType.EQ)
        rhs = self.value_name()
        self.consume(TokenType.THEN)
        then = self.parse_prefix()
        orelse: Term = Stop()
        if self.match(TokenType.ELSE):
            self.advance()
            orelse = self.parse_prefix()
        return IfThenElse(lhs, rhs, then, orelse)

    def parse_trace_entity(self) -> TraceEntity:
        self.consume(TokenType.TRACE)
        channel = self.subject_name()
        self.consume(TokenType.LANGLE)
        values = self.parse_values(TokenType.RANGLE)
        self.consume(TokenType.RANGLE)
        self.consume(TokenType.AT)
        timestamp = int(self.consume(TokenType.NUMBER).value)
        return TraceEntity(channel, values, timestamp)

    def parse_action(self) -> Term:
        subject = self.subject_name()

        if self.match(TokenType.BANG):
            self.advance()
            self.consume(TokenType.LANGLE)
            values = self.parse_values(TokenType.RANGLE)
            self.consume(TokenType.RANGLE)
            continuation: Term = Stop()
            if self.match(TokenType.DOT):
                continuation = self.parse_continuation()
            return Out(subject, values, continuation)

        if self.match(TokenType.QUESTION) or self.match(TokenType.QUERY):
            is_query = self.match(TokenType.QUERY)
            self.advance()
            params = self.parse_params()
            if len({p.text for p in params}) != len(params):
                raise self.error("Duplicate variable in a single binder")
            body = self.with_binders(params, self.parse_continuation)
            if is_query:
                return Query(subject, params, body)
            return In(subject, params, body)

        raise self.error(f"Expected '!', '?' or '?*' after {subject.text!r}")

    # Contracts

    def parse_contract(self) -> ContractExpr:
        expr = self.parse_choice()
        self.consume(TokenType.EOF)
        locations = {e.location.text for e in events_of(expr)} | self.extra_locations
        return retag_contract(expr, locations)

    def parse_choice(self) -> ContractExpr:
        left = self.parse_seq()
        if self.match(TokenType.PLUS):
            self.advance()
            return Choice(left, self.parse_choice())
        return left

    def parse_seq(self) -> ContractExpr:
        left = self.parse_postfix()
        if self.match(TokenType.DOT):
            self.advance()
            return Seq(left, self.parse_seq())
        return left

    def parse_postfix(self) -> ContractExpr:
        expr = self.parse_contract_atom()
        while self.match(TokenType.STAR):
            self.advance()
            expr = Star(expr)
        return expr

    def parse_contract_atom(self) -> ContractExpr:
        if self.match(TokenType.SUM):
            return self.parse_sum()
        if self.match(TokenType.LPAREN):
            if (self.peek_token().type == TokenType.IDENTIFIER and
                    self.peek_token(2).type in (TokenType.COMMA, TokenType.RPAREN)):
                return self.parse_event()
            self.advance()
            expr = self.parse_choice()
            self.consume(TokenType.RPAREN)
            return expr
        raise self.error(f"Unexpected token {self.current_token().value or 'end of input'!r} in contract")

    def parse_event(self) -> Event:
        self.consume(TokenType.LPAREN)
        channel = self.subject_name()
        values: tuple = ()
        if self.match(TokenType.COMMA):
            self.advance()
            if self.match(TokenType.LPAREN) and self.peek_token().type == TokenType.RPAREN:
                self.advance()
                self.advance()
            else:
                values = self.parse_values(TokenType.RPAREN)
        self.consume(TokenType.RPAREN)
        self.consume(TokenType.AT)
        location = self.location_name()
        return Event(channel, values, location)

    def parse_sum(self) -> ContractExpr:
        start = self.consume(TokenType.SUM)
        variable = self.consume(TokenType.IDENTIFIER).value
        self.consume(TokenType.IN)
        self.consume(TokenType.LBRACE)
        elements: List[Token] = []
        if not self.match(TokenType.RBRACE):
            elements.append(self.consume_element())
            while self.match(TokenType.COMMA):
                self.advance()
                elements.append(self.consume_element())
        self.consume(TokenType.RBRACE)
        if not elements:
            raise self.error(f"Empty set in generalised sum over {variable!r}", start)
        body = self.with_binders((var(variable),), self.parse_choice)
        branches = [instantiate(body, variable, element) for element in elements]
        result = branches[-1]
        for branch in reversed(branches[:-1]):
            result = Choice(branch, result)
        return result

    def consume_element(self) -> Token:
        if self.match(TokenType.NUMBER):
            return self.consume(TokenType.NUMBER)
        return self.consume(TokenType.IDENTIFIER)

def instantiate(expr: ContractExpr, variable: str, element: Token) -> ContractExpr:
    """Replace the sum variable by one element of its set."""
    target = var(variable)
    if isinstance(expr, Event):
        def value(name: Name) -> Name:
            if name != target:
                return name
            if element.type == TokenType.NUMBER:
                return Name(NameKind.INDEX, str(int(element.value)))
            return chan(element.value)
        channel = chan(element.value) if expr.channel == target else expr.channel
        location = loc(element.value) if expr.location == target else expr.location
        return Event(channel, tuple(value(v) for v in expr.values), location)
    if isinstance(expr, Star):
        return Star(instantiate(expr.body, variable, element))
    return type(expr)(instantiate(expr.left, variable, element),
                      instantiate(expr.right, variable, element))

def retag_contract(expr: ContractExpr, locations) -> ContractExpr:
    if isinstance(expr, Event):
        values = tuple(loc(v.text) if v.kind == NameKind.CHANNEL and v.text in locations else v
                       for v in expr.values)
        return Event(expr.channel, values, expr.location)
    if isinstance(expr, Star):
        return Star(retag_contract(expr.body, locations))
    return type(expr)(retag_contract(expr.left, locations),
                      retag_contract(expr.right, locations))

def _tokens(text: str) -> List[Token]:
    try:
        return Lexer(text).tokenize()
    except LexerError as e:
        raise ParseError(e.message, e.line, e.column)

def parse_system(text: str, extra_locations: Iterable[str] = ()) -> Term:
    return Parser(_tokens(text), extra_locations).parse()

def parse_process(text: str, extra_locations: Iterable[str] = ()) -> Term:
    """Parse a bare process or monitor body, without location."""
    parser = Parser(_tokens(text), extra_locations)
    term = parser.parse_process()
    parser.consume(TokenType.EOF)
    return retag_locations(term, located_names(term) | parser.extra_locations)

def parse_contract(text: str, extra_locations: Iterable[str] = ()) -> ContractExpr:
    return Parser(_tokens(text), extra_locations).parse_contract()
