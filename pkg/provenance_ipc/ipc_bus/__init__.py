from .bus import FIRST_APP_UID, INPUT_UID, RADIO_UID, SYSTEM_UID, Bus
from .process import ProcessHandle, dispatch_table
from .types import (
    CallContext,
    CallMode,
    CallTimeout,
    DuplicateApp,
    IpcError,
    PayloadTooLarge,
    Reply,
    TargetDead,
    UnknownMethod,
    UnknownTarget,
    current_chain,
)
