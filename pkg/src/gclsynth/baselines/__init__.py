from .frames import (COMPARISON_WARNING, FrameSchedule, FrameScheduler, FrameSlot, Infeasible, Timeout,
                     frame_window_violations, schedule_0gcl, schedule_fgcl)
from .wnd import WndResult, schedule_wnd

__all__ = ["COMPARISON_WARNING", "FrameSchedule", "FrameScheduler", "FrameSlot", "Infeasible", "Timeout",
           "WndResult", "frame_window_violations", "schedule_0gcl", "schedule_fgcl", "schedule_wnd"]
