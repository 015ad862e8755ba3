from .clickfraud import AdApp, HostApp, InputDispatcher, ad_validate, run_clickfraud
from .clock import ManualClock, SystemClock
from .device import SimulatedDevice
from .paybuddy import PayBuddyApp, PayBuddyServer, run_paybuddy
from .types import (
    ClickAttack,
    ClickVerdict,
    EntryKind,
    InputEvent,
    PaymentDecision,
    PayBuddyTamper,
    PurchaseOrder,
    Transcript,
)
