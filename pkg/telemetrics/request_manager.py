import contextvars
import uuid

# Run id of the current CLI invocation or HTTP request
_run_id_ctx_var = contextvars.ContextVar("run_id", default=None)


class RequestIdManager:
    @staticmethod
    def set(run_id: str = None) -> str:
        """Set a run id in the context. Generate a short one if not provided."""
        if run_id is None:
            run_id = uuid.uuid4().hex[:8]
        _run_id_ctx_var.set(run_id)
        return run_id

    @staticmethod
    def get() -> str:
        """Get the current run id from context."""
        return _run_id_ctx_var.get()

    @staticmethod
    def clear():
        """Clear the run id from context."""
        _run_id_ctx_var.set(None)
