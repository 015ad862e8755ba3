from .authority import AuthorityManager, KeyRegistry
from .types import UnknownPrincipal, UnresolvablePrincipal, Verdict
