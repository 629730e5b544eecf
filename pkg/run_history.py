"""
Run history for the lab.
Keeps a persistent record of each command run and the files it wrote.
"""
import json
import logging
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import HISTORY_FILE

logger = logging.getLogger(__name__)


class RunHistory:
    """Manages the history of laboratory runs."""

    def __init__(self, storage_file: str = HISTORY_FILE):
        """
        Initialize the RunHistory.

        Args:
            storage_file: Path to the JSON file for storing history.
        """
        self.storage_file = Path(storage_file)
        self.history_data = self._load_history()

    def _load_history(self) -> Dict[str, Any]:
        """Load history from disk."""
        if not self.storage_file.exists():
            return {"sessions": []}

        try:
            with open(self.storage_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (json.JSONDecodeError, OSError):
            # corrupt or unreadable: start fresh
            logger.warning("Run history %s is unreadable; starting a new one", self.storage_file)
            return {"sessions": []}
        if not isinstance(data, dict) or not isinstance(data.get("sessions"), list):
            logger.warning("Run history %s has an unexpected layout; starting a new one", self.storage_file)
            return {"sessions": []}
        return data

    def _save_history(self):
        """Save history to disk."""
        try:
            self.storage_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.storage_file, "w", encoding="utf-8") as f:
                json.dump(self.history_data, f, indent=4, ensure_ascii=False)
        except OSError as e:
            logger.warning("Failed to save run history: %s", e)

    def add_session(self, command: str, config_hash: str, files: List[str],
                    summary: Optional[Dict[str, Any]] = None) -> str:
        """
        Record a finished run.

        Args:
            command: subcommand name
            config_hash: hash of the RunConfig used
            files: paths written by the run
            summary: optional small dict of headline numbers

        Returns:
            The unique session ID.
        """
        session_id = str(uuid.uuid4())
        session = {
            "id": session_id,
            "timestamp": datetime.now().isoformat(),
            "command": command,
            "config_hash": config_hash,
            "count": len(files),
            "files": [str(f) for f in files],
            "summary": summary or {},
        }

        # newest first
        self.history_data["sessions"].insert(0, session)
        self._save_history()
        return session_id

    def get_sessions(self) -> List[Dict[str, Any]]:
        """Return all recorded sessions."""
        return self.history_data["sessions"]

    def get_session_by_id(self, session_id: str) -> Optional[Dict[str, Any]]:
        """Retrieve a specific session by ID."""
        for session in self.history_data["sessions"]:
            if session["id"] == session_id:
                return session
        return None

    def find_session_for_file(self, path) -> Optional[Dict[str, Any]]:
        """
        The most recent session that wrote a file.

        Args:
            path: the data file to trace

        Returns:
            The session dict, or None when no run recorded the file.
        """
        target = Path(path).resolve()
        for session in self.history_data["sessions"]:
            for recorded in session.get("files", []):
                if Path(recorded).resolve() == target:
                    return session
        return None

    def clear_history(self):
        """Clear all history."""
        self.history_data = {"sessions": []}
        self._save_history()
