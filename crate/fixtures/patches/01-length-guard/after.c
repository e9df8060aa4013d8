static int send_msg(struct dvb_frontend *fe, struct dvb_diseqc_master_cmd *m)
{
	struct state *st = fe->demodulator_priv;

	if (m->msg_len > 6)
		return -EINVAL;
	memcpy(st->buf, m->msg, m->msg_len);
	return write_buf(st, 0x23);
}
